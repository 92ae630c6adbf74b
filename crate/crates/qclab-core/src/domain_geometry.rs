//! Jordan domains bounded by sampled closed curves: inside tests, distance
//! queries, Lipschitz windows, Whitney coverings, chains, shadows and
//! arc-length reparameterization.

use std::collections::VecDeque;
use std::f64::consts::TAU;
use std::io::{Read, Write};

use crate::error::{invalid, QcError, Result};
use crate::fft::{fft1, signed_index};
use crate::grid_field::{GridSpec, RegionMask};
use crate::quadrature::gauss_legendre_on;
use crate::C64;

/// How a curve is interpolated between its nodes.
#[derive(Clone, Debug, PartialEq)]
pub enum CurveKind {
    /// Trigonometric interpolation of the samples.
    Smooth,
    /// Closed polygon; `breaks[i]` is the parameter of vertex i.
    Polygonal { vertices: Vec<C64>, breaks: Vec<f64> },
}

/// Closed curve sampled at t_j = 2πj/M.
#[derive(Clone, Debug)]
pub struct BoundaryCurve {
    points: Vec<C64>,
    derivs: Vec<C64>,
    kind: CurveKind,
    /// Trigonometric interpolant, smooth curves only.
    coeffs: TrigSeries,
    reoriented: bool,
}

/// One quadrature node on the curve: the point τ and the weight dτ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContourNode {
    pub point: C64,
    pub weight: C64,
}

/// Result of a point-in-domain query.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    Inside,
    Outside,
    /// Too close to the curve for the quadrature to decide.
    Indeterminate,
}

/// Two-sided trigonometric coefficients c_k, k = kmin..=kmax (Nyquist split).
#[derive(Clone, Debug, Default)]
struct TrigSeries {
    kmin: i64,
    c: Vec<C64>,
}

impl TrigSeries {
    fn new(points: &[C64]) -> Self {
        let m = points.len();
        let mut f = points.to_vec();
        fft1(&mut f, false);
        let kmin = -((m / 2) as i64);
        let kmax = if m % 2 == 0 { m as i64 / 2 } else { (m as i64 - 1) / 2 };
        let mut c = vec![C64::new(0.0, 0.0); (kmax - kmin + 1) as usize];
        for (i, v) in f.into_iter().enumerate() {
            let k = signed_index(i, m);
            let v = v / m as f64;
            if m % 2 == 0 && i == m / 2 {
                c[(k - kmin) as usize] += 0.5 * v;
                c[(-k - kmin) as usize] += 0.5 * v;
            } else {
                c[(k - kmin) as usize] += v;
            }
        }
        // drop outer coefficients at rounding level
        let top = c.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let keep = |v: &C64| v.norm() > 1e-16 * top;
        let first = c.iter().position(keep).unwrap_or(0);
        let last = c.iter().rposition(keep).unwrap_or(0);
        Self {
            kmin: kmin + first as i64,
            c: c[first..=last].to_vec(),
        }
    }

    fn iter(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        self.c.iter().enumerate().map(move |(i, &v)| (self.kmin + i as i64, v))
    }

    /// d^order/dt^order of Σ c_k e^{ikt}.
    fn eval(&self, t: f64, order: u32) -> C64 {
        let step = C64::from_polar(1.0, t);
        let mut e = C64::from_polar(1.0, self.kmin as f64 * t);
        let mut s = C64::new(0.0, 0.0);
        for (i, &c) in self.c.iter().enumerate() {
            let k = (self.kmin + i as i64) as f64;
            let f = match order {
                0 => C64::new(1.0, 0.0),
                1 => C64::new(0.0, k),
                2 => C64::new(-k * k, 0.0),
                o => C64::new(0.0, k).powu(o),
            };
            s += c * f * e;
            e *= step;
        }
        s
    }
}

impl BoundaryCurve {
    fn build(points: Vec<C64>, derivs: Vec<C64>, kind: CurveKind) -> Result<Self> {
        if points.len() < 8 {
            return Err(invalid("a boundary curve needs at least 8 nodes"));
        }
        if points.iter().chain(&derivs).any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(invalid("non-finite curve sample"));
        }
        let coeffs = match kind {
            CurveKind::Smooth => TrigSeries::new(&points),
            CurveKind::Polygonal { .. } => TrigSeries::default(),
        };
        let mut curve = Self {
            points,
            derivs,
            kind,
            coeffs,
            reoriented: false,
        };
        if curve.signed_area() < 0.0 {
            curve = curve.reversed();
        }
        Ok(curve)
    }

    /// Smooth curve from a parameterization and its derivative.
    pub fn from_fn(m: usize, gamma: impl Fn(f64) -> C64, dgamma: impl Fn(f64) -> C64) -> Result<Self> {
        let t: Vec<f64> = (0..m).map(|j| TAU * j as f64 / m as f64).collect();
        Self::build(
            t.iter().map(|&s| gamma(s)).collect(),
            t.iter().map(|&s| dgamma(s)).collect(),
            CurveKind::Smooth,
        )
    }

    /// Smooth curve from positions only; derivatives are spectral.
    pub fn from_samples(points: Vec<C64>) -> Result<Self> {
        let coeffs = TrigSeries::new(&points);
        let m = points.len();
        let derivs = (0..m)
            .map(|j| coeffs.eval(TAU * j as f64 / m as f64, 1))
            .collect();
        Self::build(points, derivs, CurveKind::Smooth)
    }

    pub fn from_samples_with_derivatives(points: Vec<C64>, derivs: Vec<C64>) -> Result<Self> {
        if points.len() != derivs.len() {
            return Err(invalid("position and derivative counts differ"));
        }
        Self::build(points, derivs, CurveKind::Smooth)
    }

    pub fn circle(center: C64, radius: f64, m: usize) -> Result<Self> {
        Self::from_fn(
            m,
            |t| center + radius * C64::from_polar(1.0, t),
            |t| radius * C64::new(0.0, 1.0) * C64::from_polar(1.0, t),
        )
    }

    pub fn ellipse(a: f64, b: f64, m: usize) -> Result<Self> {
        Self::from_fn(
            m,
            |t| C64::new(a * t.cos(), b * t.sin()),
            |t| C64::new(-a * t.sin(), b * t.cos()),
        )
    }

    /// w(t) = e^{it} + ε e^{2it}.
    pub fn limacon(eps: f64, m: usize) -> Result<Self> {
        let i = C64::new(0.0, 1.0);
        Self::from_fn(
            m,
            |t| C64::from_polar(1.0, t) + eps * C64::from_polar(1.0, 2.0 * t),
            |t| i * C64::from_polar(1.0, t) + 2.0 * eps * i * C64::from_polar(1.0, 2.0 * t),
        )
    }

    /// Closed polygon with `m` nodes spread proportionally to edge length.
    pub fn polygon(vertices: &[C64], m: usize) -> Result<Self> {
        let nv = vertices.len();
        if nv < 3 {
            return Err(invalid("a polygon needs at least 3 vertices"));
        }
        let lens: Vec<f64> = (0..nv).map(|i| (vertices[(i + 1) % nv] - vertices[i]).norm()).collect();
        let total: f64 = lens.iter().sum();
        if lens.iter().any(|&l| l <= 0.0) {
            return Err(invalid("repeated polygon vertex"));
        }
        let mut breaks = Vec::with_capacity(nv + 1);
        let mut acc = 0.0;
        for l in &lens {
            breaks.push(TAU * acc / total);
            acc += l;
        }
        breaks.push(TAU);
        let kind = CurveKind::Polygonal {
            vertices: vertices.to_vec(),
            breaks,
        };
        let mut points = Vec::with_capacity(m);
        let mut derivs = Vec::with_capacity(m);
        for j in 0..m {
            let t = TAU * j as f64 / m as f64;
            let (p, d) = polygon_eval(&kind, t);
            points.push(p);
            derivs.push(d);
        }
        Self::build(points, derivs, kind)
    }

    fn reversed(&self) -> Self {
        let m = self.points.len();
        let idx = |j: usize| (m - j) % m;
        let points: Vec<C64> = (0..m).map(|j| self.points[idx(j)]).collect();
        let derivs = (0..m).map(|j| -self.derivs[idx(j)]).collect();
        let kind = match &self.kind {
            CurveKind::Smooth => CurveKind::Smooth,
            CurveKind::Polygonal { vertices, breaks } => {
                let nv = vertices.len();
                let mut v = vec![vertices[0]];
                v.extend((1..nv).rev().map(|i| vertices[i]));
                let mut b = vec![0.0];
                b.extend((1..nv).rev().map(|i| TAU - breaks[i]));
                b.push(TAU);
                CurveKind::Polygonal { vertices: v, breaks: b }
            }
        };
        let coeffs = match kind {
            CurveKind::Smooth => TrigSeries::new(&points),
            _ => TrigSeries::default(),
        };
        Self {
            points,
            derivs,
            kind,
            coeffs,
            reoriented: !self.reoriented,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn derivatives(&self) -> &[C64] {
        &self.derivs
    }

    pub fn kind(&self) -> &CurveKind {
        &self.kind
    }

    pub fn is_smooth(&self) -> bool {
        matches!(self.kind, CurveKind::Smooth)
    }

    /// True when the input was clockwise and has been reversed.
    pub fn was_reoriented(&self) -> bool {
        self.reoriented
    }

    pub fn parameter(&self, j: usize) -> f64 {
        TAU * j as f64 / self.points.len() as f64
    }

    pub fn eval(&self, t: f64) -> C64 {
        match &self.kind {
            CurveKind::Smooth => self.coeffs.eval(t, 0),
            k => polygon_eval(k, t).0,
        }
    }

    pub fn eval_derivative(&self, t: f64) -> C64 {
        match &self.kind {
            CurveKind::Smooth => self.coeffs.eval(t, 1),
            k => polygon_eval(k, t).1,
        }
    }

    pub fn eval_second_derivative(&self, t: f64) -> C64 {
        match &self.kind {
            CurveKind::Smooth => self.coeffs.eval(t, 2),
            _ => C64::new(0.0, 0.0),
        }
    }

    /// Positions and derivatives at `count` uniform parameters.
    pub fn resample(&self, count: usize) -> (Vec<C64>, Vec<C64>) {
        if count == self.len() {
            return (self.points.clone(), self.derivs.clone());
        }
        match &self.kind {
            CurveKind::Smooth if count > self.len() => {
                let mut p = vec![C64::new(0.0, 0.0); count];
                let mut d = vec![C64::new(0.0, 0.0); count];
                for (k, c) in self.coeffs.iter() {
                    let i = k.rem_euclid(count as i64) as usize;
                    p[i] += c;
                    d[i] += c * C64::new(0.0, k as f64);
                }
                // inverse transform without normalization = synthesis
                fft1(&mut p, true);
                fft1(&mut d, true);
                let s = count as f64;
                (p.into_iter().map(|v| v * s).collect(), d.into_iter().map(|v| v * s).collect())
            }
            _ => {
                let t: Vec<f64> = (0..count).map(|j| TAU * j as f64 / count as f64).collect();
                (
                    t.iter().map(|&s| self.eval(s)).collect(),
                    t.iter().map(|&s| self.eval_derivative(s)).collect(),
                )
            }
        }
    }

    /// Quadrature nodes for ∮ g(τ) dτ. Trapezoid for smooth curves, Gauss on
    /// each edge for polygons.
    pub fn contour_nodes(&self, count: usize) -> Vec<ContourNode> {
        match &self.kind {
            CurveKind::Smooth => {
                let (p, d) = self.resample(count);
                let w = TAU / count as f64;
                p.into_iter()
                    .zip(d)
                    .map(|(point, d)| ContourNode { point, weight: d * w })
                    .collect()
            }
            CurveKind::Polygonal { vertices, .. } => {
                let nv = vertices.len();
                let total: f64 = (0..nv).map(|i| (vertices[(i + 1) % nv] - vertices[i]).norm()).sum();
                let mut out = Vec::with_capacity(count + 4 * nv);
                for i in 0..nv {
                    let (a, b) = (vertices[i], vertices[(i + 1) % nv]);
                    let k = ((count as f64 * (b - a).norm() / total).round() as usize).max(4);
                    let (x, w) = gauss_legendre_on(k, 0.0, 1.0);
                    out.extend(x.iter().zip(&w).map(|(&s, &wt)| ContourNode {
                        point: a + (b - a) * s,
                        weight: (b - a) * wt,
                    }));
                }
                out
            }
        }
    }

    /// Largest gap between consecutive nodes.
    pub fn node_spacing(&self) -> f64 {
        let m = self.len();
        (0..m)
            .map(|j| (self.points[(j + 1) % m] - self.points[j]).norm())
            .fold(0.0, f64::max)
    }

    pub fn length(&self) -> f64 {
        match &self.kind {
            CurveKind::Smooth => {
                let (_, d) = self.resample(4 * self.len());
                d.iter().map(|v| v.norm()).sum::<f64>() * TAU / d.len() as f64
            }
            CurveKind::Polygonal { vertices, .. } => {
                let nv = vertices.len();
                (0..nv).map(|i| (vertices[(i + 1) % nv] - vertices[i]).norm()).sum()
            }
        }
    }

    /// Signed enclosed area ½ Im ∮ z̄ dz (positive for counterclockwise).
    pub fn signed_area(&self) -> f64 {
        let nodes = self.contour_nodes(self.len().max(64));
        0.5 * nodes.iter().map(|n| (n.point.conj() * n.weight).im).sum::<f64>()
    }

    /// Area centroid, from ∫_Ω z dm = (1/2i)∮ z z̄ dz.
    pub fn centroid(&self) -> C64 {
        let nodes = self.contour_nodes(self.len().max(64));
        let s: C64 = nodes.iter().map(|n| n.point * n.point.conj() * n.weight).sum();
        s / C64::new(0.0, 2.0) / self.signed_area()
    }

    pub fn diameter(&self) -> f64 {
        let pts = &self.points;
        let step = (pts.len() / 512).max(1);
        let mut d: f64 = 0.0;
        for i in (0..pts.len()).step_by(step) {
            for j in (i..pts.len()).step_by(step) {
                d = d.max((pts[i] - pts[j]).norm());
            }
        }
        d
    }

    /// Winding number of the curve about z by trapezoid quadrature.
    pub fn winding_number(&self, z: C64) -> f64 {
        let nodes = self.contour_nodes(self.len());
        let s: C64 = nodes.iter().map(|n| n.weight / (n.point - z)).sum();
        (s / C64::new(0.0, TAU)).re
    }

    /// Empirical bi-Lipschitz constants c ≤ |γ(s)−γ(t)|/d_T(s,t) ≤ C on node pairs.
    pub fn bilipschitz_constants(&self) -> (f64, f64) {
        let m = self.len();
        let step = (m / 256).max(1);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in (0..m).step_by(step) {
            for j in (0..m).step_by(step) {
                if i == j {
                    continue;
                }
                let dt = {
                    let d = (self.parameter(i) - self.parameter(j)).abs();
                    d.min(TAU - d)
                };
                let r = (self.points[i] - self.points[j]).norm() / dt;
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        (lo, hi)
    }

    /// Reparameterize by arc length. Returns the new curve and the worst
    /// relative deviation of its spectral |γ'| from length/2π.
    pub fn arc_length_reparameterize(&self) -> Result<(BoundaryCurve, f64)> {
        let m = self.len();
        if let CurveKind::Polygonal { vertices, .. } = &self.kind {
            let c = BoundaryCurve::polygon(vertices, m)?;
            return Ok((c, 0.0));
        }
        let fine = 4 * m;
        let (_, d) = self.resample(fine);
        let speed: Vec<f64> = d.iter().map(|v| v.norm()).collect();
        if speed.iter().any(|&s| s < 1e-12) {
            return Err(invalid("|γ'| vanishes at a node"));
        }
        let mut sc: Vec<C64> = speed.iter().map(|&s| C64::new(s, 0.0)).collect();
        fft1(&mut sc, false);
        let mean = sc[0].re / fine as f64;
        let total = mean * TAU;
        let terms: Vec<(f64, C64)> = sc
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| (signed_index(i, fine) as f64, c / fine as f64))
            .filter(|(_, c)| c.norm() > 1e-17)
            .collect();
        // s(t) = mean·t + Σ c_k (e^{ikt} − 1)/(ik)
        let arc = |t: f64| -> f64 {
            let mut s = mean * t;
            for &(k, c) in &terms {
                s += (c * (C64::from_polar(1.0, k * t) - 1.0) / C64::new(0.0, k)).re;
            }
            s
        };
        let mut pts = Vec::with_capacity(m);
        let mut ders = Vec::with_capacity(m);
        let mut t = 0.0;
        for j in 0..m {
            let target = total * j as f64 / m as f64;
            for _ in 0..50 {
                let sp = self.eval_derivative(t).norm();
                let dt = (arc(t) - target) / sp;
                t -= dt;
                if dt.abs() < 1e-15 {
                    break;
                }
            }
            let g1 = self.eval_derivative(t);
            pts.push(self.eval(t));
            ders.push(g1 / g1.norm() * (total / TAU));
        }
        let c = BoundaryCurve::from_samples(pts)?;
        let target = total / TAU;
        let dev = c
            .derivatives()
            .iter()
            .map(|v| (v.norm() - target).abs() / target)
            .fold(0.0, f64::max);
        let c = BoundaryCurve::from_samples_with_derivatives(c.points, ders)?;
        Ok((c, dev))
    }

    /// Fine polyline used for distance and inside queries.
    pub fn polyline(&self) -> Vec<C64> {
        match &self.kind {
            CurveKind::Polygonal { vertices, .. } => vertices.clone(),
            CurveKind::Smooth => {
                let count = (4 * self.len()).max(4096);
                self.resample(count).0
            }
        }
    }

    /// CSV "t, re γ, im γ, re γ', im γ'".
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for j in 0..self.len() {
            let (p, d) = (self.points[j], self.derivs[j]);
            wr.write_record(&[
                self.parameter(j).to_string(),
                p.re.to_string(),
                p.im.to_string(),
                d.re.to_string(),
                d.im.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Rows "t, re γ, im γ[, re γ', im γ']"; t is assumed uniform.
    pub fn read_csv<R: Read>(r: R) -> Result<BoundaryCurve> {
        let mut rd = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(r);
        let mut pts = Vec::new();
        let mut ders = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| QcError::Format(format!("curve csv: {e}")))?;
            match vals.len() {
                3 => pts.push(C64::new(vals[1], vals[2])),
                5 => {
                    pts.push(C64::new(vals[1], vals[2]));
                    ders.push(C64::new(vals[3], vals[4]));
                }
                n => return Err(QcError::Format(format!("curve csv row with {n} fields"))),
            }
        }
        if ders.is_empty() {
            BoundaryCurve::from_samples(pts)
        } else if ders.len() == pts.len() {
            BoundaryCurve::from_samples_with_derivatives(pts, ders)
        } else {
            Err(QcError::Format("mixed curve csv rows".into()))
        }
    }
}

fn polygon_eval(kind: &CurveKind, t: f64) -> (C64, C64) {
    let CurveKind::Polygonal { vertices, breaks } = kind else {
        unreachable!()
    };
    let nv = vertices.len();
    let t = t.rem_euclid(TAU);
    let i = match breaks.iter().rposition(|&b| b <= t) {
        Some(i) => i.min(nv - 1),
        None => 0,
    };
    let (a, b) = (vertices[i], vertices[(i + 1) % nv]);
    let dt = breaks[i + 1] - breaks[i];
    let s = (t - breaks[i]) / dt;
    (a + (b - a) * s, (b - a) / dt)
}

/// Distance from a point to an axis-parallel rectangle (0 inside).
fn point_rect_distance(z: C64, lo: C64, hi: C64) -> f64 {
    let dx = (lo.re - z.re).max(0.0).max(z.re - hi.re);
    let dy = (lo.im - z.im).max(0.0).max(z.im - hi.im);
    dx.hypot(dy)
}

fn point_segment_distance(z: C64, a: C64, b: C64) -> (f64, f64) {
    let ab = b - a;
    let l2 = ab.norm_sqr();
    let s = if l2 == 0.0 {
        0.0
    } else {
        (((z - a) * ab.conj()).re / l2).clamp(0.0, 1.0)
    };
    ((a + ab * s - z).norm(), s)
}

/// Liang–Barsky test of whether segment ab meets the closed rectangle.
fn segment_hits_rect(a: C64, b: C64, lo: C64, hi: C64) -> bool {
    let d = b - a;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (p, q) in [
        (-d.re, a.re - lo.re),
        (d.re, hi.re - a.re),
        (-d.im, a.im - lo.im),
        (d.im, hi.im - a.im),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

fn segment_rect_distance(a: C64, b: C64, lo: C64, hi: C64) -> f64 {
    if segment_hits_rect(a, b, lo, hi) {
        return 0.0;
    }
    let corners = [lo, C64::new(hi.re, lo.im), hi, C64::new(lo.re, hi.im)];
    let mut d = point_rect_distance(a, lo, hi).min(point_rect_distance(b, lo, hi));
    for c in corners {
        d = d.min(point_segment_distance(c, a, b).0);
    }
    d
}

/// Axis-aligned distance between two rectangles.
fn rect_rect_distance(alo: C64, ahi: C64, blo: C64, bhi: C64) -> f64 {
    let dx = (blo.re - ahi.re).max(alo.re - bhi.re).max(0.0);
    let dy = (blo.im - ahi.im).max(alo.im - bhi.im).max(0.0);
    dx.hypot(dy)
}

/// Bucket grid over the segments of a closed polyline.
#[derive(Clone, Debug)]
struct SegmentIndex {
    segs: Vec<(C64, C64)>,
    origin: C64,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl SegmentIndex {
    fn new(poly: &[C64]) -> Self {
        let n = poly.len();
        let segs: Vec<(C64, C64)> = (0..n).map(|i| (poly[i], poly[(i + 1) % n])).collect();
        let (mut lo, mut hi) = (poly[0], poly[0]);
        for p in poly {
            lo = C64::new(lo.re.min(p.re), lo.im.min(p.im));
            hi = C64::new(hi.re.max(p.re), hi.im.max(p.im));
        }
        let span = (hi.re - lo.re).max(hi.im - lo.im).max(1e-12);
        let side = ((n as f64).sqrt().ceil() as usize).clamp(1, 256);
        let cell = span / side as f64 * 1.0001;
        let nx = (((hi.re - lo.re) / cell).floor() as usize + 1).max(1);
        let ny = (((hi.im - lo.im) / cell).floor() as usize + 1).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        for (s, &(a, b)) in segs.iter().enumerate() {
            let (i0, j0) = Self::cell_of(lo, cell, nx, ny, C64::new(a.re.min(b.re), a.im.min(b.im)));
            let (i1, j1) = Self::cell_of(lo, cell, nx, ny, C64::new(a.re.max(b.re), a.im.max(b.im)));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(s as u32);
                }
            }
        }
        Self {
            segs,
            origin: lo,
            cell,
            nx,
            ny,
            buckets,
        }
    }

    fn cell_of(origin: C64, cell: f64, nx: usize, ny: usize, z: C64) -> (usize, usize) {
        let i = ((z.re - origin.re) / cell).floor().clamp(0.0, (nx - 1) as f64) as usize;
        let j = ((z.im - origin.im) / cell).floor().clamp(0.0, (ny - 1) as f64) as usize;
        (i, j)
    }

    /// Minimum of `metric` over segments, searching rings of buckets around the
    /// query box until the ring lower bound exceeds the best value.
    fn search(&self, lo: C64, hi: C64, metric: impl Fn(C64, C64) -> f64) -> (f64, usize) {
        let (i0, j0) = Self::cell_of(self.origin, self.cell, self.nx, self.ny, lo);
        let (i1, j1) = Self::cell_of(self.origin, self.cell, self.nx, self.ny, hi);
        let mut best = f64::INFINITY;
        let mut arg = 0usize;
        let maxr = self.nx.max(self.ny);
        for r in 0..=maxr {
            let (ri0, rj0) = (i0 as i64 - r as i64, j0 as i64 - r as i64);
            let (ri1, rj1) = (i1 as i64 + r as i64, j1 as i64 + r as i64);
            for j in rj0..=rj1 {
                if j < 0 || j >= self.ny as i64 {
                    continue;
                }
                let edge_row = j == rj0 || j == rj1;
                let mut i = ri0;
                while i <= ri1 {
                    if i >= 0 && i < self.nx as i64 {
                        for &s in &self.buckets[j as usize * self.nx + i as usize] {
                            let (a, b) = self.segs[s as usize];
                            let d = metric(a, b);
                            if d < best {
                                best = d;
                                arg = s as usize;
                            }
                        }
                    }
                    i = if edge_row || i == ri1 { i + 1 } else { ri1 };
                }
            }
            if best <= r as f64 * self.cell {
                break;
            }
        }
        (best, arg)
    }

    fn point_distance(&self, z: C64) -> (f64, usize) {
        self.search(z, z, |a, b| point_segment_distance(z, a, b).0)
    }

    fn rect_distance(&self, lo: C64, hi: C64) -> f64 {
        self.search(lo, hi, |a, b| segment_rect_distance(a, b, lo, hi)).0
    }

    /// Crossing-number parity for a point.
    fn contains(&self, z: C64) -> bool {
        let mut inside = false;
        for &(a, b) in &self.segs {
            if (a.im > z.im) != (b.im > z.im) {
                let x = a.re + (z.im - a.im) / (b.im - a.im) * (b.re - a.re);
                if x > z.re {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

/// A boundary window: local frame at x_j with the boundary written as the
/// graph v = A(u), Ω lying above.
#[derive(Clone, Debug)]
pub struct Window {
    pub center: C64,
    /// Curve parameter of the center.
    pub t_center: f64,
    /// Unit tangent; local coordinates are (w − center)·conj(frame).
    pub frame: C64,
    pub r: f64,
    pub delta: f64,
    /// ε_δ = R/√(1+δ²); the graph is sampled on [−ε_δ, ε_δ].
    pub eps: f64,
    u0: f64,
    du: f64,
    graph: Vec<f64>,
    /// max |A'| over the sampled span.
    pub slope_max: f64,
}

impl Window {
    pub fn to_local(&self, w: C64) -> C64 {
        (w - self.center) * self.frame.conj()
    }

    pub fn to_global(&self, local: C64) -> C64 {
        self.center + local * self.frame
    }

    pub fn graph_span(&self) -> (f64, f64) {
        (self.u0, self.u0 + self.du * (self.graph.len() - 1) as f64)
    }

    /// A(u) by 6-point Lagrange interpolation of the graph samples.
    pub fn graph(&self, u: f64) -> f64 {
        crate::multiscale_betas::lagrange6(&self.graph, self.u0, self.du, u)
    }

    pub fn graph_samples(&self) -> &[f64] {
        &self.graph
    }
}

/// A Jordan domain with a distance index over its boundary.
#[derive(Clone, Debug)]
pub struct JordanDomain {
    curve: BoundaryCurve,
    poly: Vec<C64>,
    index: SegmentIndex,
}

impl JordanDomain {
    pub fn new(curve: BoundaryCurve) -> Self {
        let poly = curve.polyline();
        let index = SegmentIndex::new(&poly);
        Self { curve, poly, index }
    }

    pub fn curve(&self) -> &BoundaryCurve {
        &self.curve
    }

    /// The fine polyline behind distance and inside queries.
    pub fn polyline(&self) -> &[C64] {
        &self.poly
    }

    /// Winding-number membership; points within one node spacing of the
    /// curve are reported indeterminate.
    pub fn inside(&self, z: C64) -> Membership {
        if self.distance_coarse(z) < self.curve.node_spacing() {
            return Membership::Indeterminate;
        }
        if self.curve.winding_number(z).round() == 1.0 {
            Membership::Inside
        } else {
            Membership::Outside
        }
    }

    /// Crossing-number membership on the fine polyline (never indeterminate).
    pub fn contains(&self, z: C64) -> bool {
        self.index.contains(z)
    }

    /// Distance to the fine boundary polyline.
    pub fn distance_coarse(&self, z: C64) -> f64 {
        self.index.point_distance(z).0
    }

    /// Distance to the boundary, refined by Newton on the parameter for smooth curves.
    pub fn distance(&self, z: C64) -> f64 {
        let (d0, seg) = self.index.point_distance(z);
        if !self.curve.is_smooth() {
            return d0;
        }
        let n = self.index.segs.len();
        let (a, b) = self.index.segs[seg];
        let s = point_segment_distance(z, a, b).1;
        let mut t = TAU * (seg as f64 + s) / n as f64;
        for _ in 0..20 {
            let g = self.curve.eval(t) - z;
            let g1 = self.curve.eval_derivative(t);
            let g2 = self.curve.eval_second_derivative(t);
            let f = (g.conj() * g1).re;
            let fp = g1.norm_sqr() + (g.conj() * g2).re;
            if fp <= 0.0 {
                return d0;
            }
            let dt = f / fp;
            t -= dt;
            if dt.abs() < 1e-14 {
                let d = (self.curve.eval(t) - z).norm();
                // chords cut corners by at most a few node spacings squared
                return if (d - d0).abs() < 1e-3 { d } else { d0 };
            }
        }
        d0
    }

    /// Distance from the closed rectangle [lo, hi] to the boundary.
    pub fn rect_distance(&self, lo: C64, hi: C64) -> f64 {
        self.index.rect_distance(lo, hi)
    }

    /// Grid mask of Ω by scanline crossings.
    pub fn mask(&self, spec: GridSpec) -> RegionMask {
        let n = spec.n();
        let mut bits = vec![false; spec.len()];
        let mut xs = Vec::new();
        for k in 0..n {
            let y = spec.point(0, k).im;
            xs.clear();
            for &(a, b) in &self.index.segs {
                if (a.im > y) != (b.im > y) {
                    xs.push(a.re + (y - a.im) / (b.im - a.im) * (b.re - a.re));
                }
            }
            xs.sort_by(f64::total_cmp);
            for pair in xs.chunks(2) {
                if pair.len() < 2 {
                    break;
                }
                for (j, bit) in bits[k * n..(k + 1) * n].iter_mut().enumerate() {
                    let x = spec.point(j, k).re;
                    if x > pair[0] && x < pair[1] {
                        *bit = true;
                    }
                }
            }
        }
        RegionMask::from_bits(spec, bits).expect("sized by spec")
    }

    /// Signed distance (negative inside) at every grid point.
    pub fn signed_distance_field(&self, spec: GridSpec) -> Vec<f64> {
        let mask = self.mask(spec);
        (0..spec.len())
            .map(|i| {
                let d = self.distance_coarse(spec.point_at(i));
                if mask.bits()[i] {
                    -d
                } else {
                    d
                }
            })
            .collect()
    }

    /// Indicator of Ω smoothed across a band of total width 4h.
    pub fn smoothed_indicator(&self, spec: GridSpec) -> crate::grid_field::GridField {
        let sd = self.signed_distance_field(spec);
        let h = spec.spacing();
        let vals = sd
            .iter()
            .map(|&d| C64::new(crate::grid_field::smooth_step(d / (2.0 * h)), 0.0))
            .collect();
        crate::grid_field::GridField::from_raw(spec, vals)
    }

    /// Shadow B(x, ρδ(x)) ∩ Ω as a grid mask.
    pub fn shadow(&self, x: C64, rho: f64, spec: GridSpec) -> RegionMask {
        let r = rho * self.distance(x);
        let omega = self.mask(spec);
        RegionMask::from_fn(spec, |z| (z - x).norm() < r)
            .intersect(&omega)
            .expect("same spec")
    }

    /// Greedy windows: centers with B(x_j, ε_δ/12) disjoint, B(x_j, ε_δ/6)
    /// covering the boundary nodes. δ grows (up to 10) when a projection fails.
    pub fn build_windows(&self, r: f64, delta: f64) -> Result<Vec<Window>> {
        let mut delta = delta;
        loop {
            match self.try_windows(r, delta) {
                Ok(w) => return Ok(w),
                Err(e) => {
                    if delta >= 10.0 {
                        return Err(e);
                    }
                    delta = (delta * 1.5).min(10.0);
                }
            }
        }
    }

    fn try_windows(&self, r: f64, delta: f64) -> Result<Vec<Window>> {
        let eps = r / (1.0 + delta * delta).sqrt();
        let m = self.curve.len();
        let mut chosen: Vec<usize> = Vec::new();
        for j in 0..m {
            let p = self.curve.points()[j];
            if chosen.iter().all(|&c| (self.curve.points()[c] - p).norm() >= eps / 6.0) {
                chosen.push(j);
            }
        }
        chosen
            .into_iter()
            .map(|j| self.window_at(self.curve.parameter(j), r, delta, eps))
            .collect()
    }

    /// Overlap count of the doubled balls B(x_j, ε_δ/6) over the boundary nodes.
    pub fn window_overlap(&self, windows: &[Window]) -> usize {
        self.curve
            .points()
            .iter()
            .map(|&p| windows.iter().filter(|w| (w.center - p).norm() < w.eps / 6.0).count())
            .max()
            .unwrap_or(0)
    }

    fn window_at(&self, t0: f64, r: f64, delta: f64, eps: f64) -> Result<Window> {
        let c = &self.curve;
        let center = c.eval(t0);
        let d0 = c.eval_derivative(t0);
        let frame = d0 / d0.norm();
        let count = 2049usize;
        let du = 2.0 * eps / (count - 1) as f64;
        let mut graph = vec![0.0; count];
        let mut slope_max: f64 = 0.0;
        let fail = || QcError::InvalidArgument(format!("window projection not single-valued (δ = {delta})"));
        let local = |t: f64| (c.eval(t) - center) * frame.conj();
        match c.kind() {
            CurveKind::Smooth => {
                // march outward from the center in both directions
                for dir in [1i64, -1] {
                    let mut t = t0;
                    let mid = (count / 2) as i64;
                    let mut k = mid;
                    while (0..count as i64).contains(&k) {
                        let u = -eps + k as f64 * du;
                        for _ in 0..60 {
                            let g = local(t).re - u;
                            let gp = (c.eval_derivative(t) * frame.conj()).re;
                            if gp <= 0.0 {
                                return Err(fail());
                            }
                            let dt = g / gp;
                            t -= dt;
                            if dt.abs() < 1e-15 {
                                break;
                            }
                        }
                        let l = local(t);
                        if (l.re - u).abs() > 1e-10 {
                            return Err(fail());
                        }
                        let d = c.eval_derivative(t) * frame.conj();
                        if d.re <= 0.0 {
                            return Err(fail());
                        }
                        slope_max = slope_max.max((d.im / d.re).abs());
                        graph[k as usize] = l.im;
                        k += dir;
                    }
                }
            }
            CurveKind::Polygonal { .. } => {
                let poly = &self.poly;
                let n = poly.len();
                let loc: Vec<C64> = poly.iter().map(|&p| (p - center) * frame.conj()).collect();
                for (k, g) in graph.iter_mut().enumerate() {
                    let u = -eps + k as f64 * du;
                    // the crossing of the vertical line u nearest the origin
                    let mut best: Option<(f64, f64)> = None;
                    for i in 0..n {
                        let (a, b) = (loc[i], loc[(i + 1) % n]);
                        if (a.re <= u && b.re >= u && b.re > a.re) || (a.re >= u && b.re <= u && a.re > b.re) {
                            let s = (u - a.re) / (b.re - a.re);
                            let v = a.im + s * (b.im - a.im);
                            if best.is_none_or(|(bv, _)| v.abs() < bv.abs()) {
                                best = Some((v, (b.im - a.im) / (b.re - a.re)));
                            }
                        }
                    }
                    let (v, sl) = best.ok_or_else(fail)?;
                    *g = v;
                    slope_max = slope_max.max(sl.abs());
                }
            }
        }
        if slope_max > delta {
            return Err(fail());
        }
        // no other part of the curve may re-enter the window box
        let box_half = eps;
        let band = slope_max * du + 1e-9;
        for &p in &self.poly {
            let l = (p - center) * frame.conj();
            if l.re.abs() < box_half && l.im.abs() < box_half {
                let a = {
                    let x = (l.re + eps) / du;
                    let k = (x.round() as usize).min(count - 1);
                    graph[k]
                };
                if (l.im - a).abs() > band {
                    return Err(fail());
                }
            }
        }
        Ok(Window {
            center,
            t_center: t0,
            frame,
            r,
            delta,
            eps,
            u0: -eps,
            du,
            graph,
            slope_max,
        })
    }

    /// Whitney covering with subdivision floor `floor_level` below the top
    /// level (top cubes have side ≥ diam Ω).
    pub fn whitney_covering(&self, c_w: f64, floor_level: u32) -> Result<WhitneyCovering> {
        if !(c_w > 0.0) {
            return Err(invalid("C_W must be positive"));
        }
        let budget = 1_000_000usize;
        let diam = self.curve.diameter();
        let top = diam.log2().ceil();
        let s0 = 2f64.powf(top);
        let ell_floor = s0 / 2f64.powi(floor_level as i32);
        let est = (4.0 * self.curve.length() / ell_floor) as usize;
        if est > budget {
            return Err(QcError::CubeBudget(est));
        }
        let poly = &self.poly;
        let (mut lo, mut hi) = (poly[0], poly[0]);
        for p in poly {
            lo = C64::new(lo.re.min(p.re), lo.im.min(p.im));
            hi = C64::new(hi.re.max(p.re), hi.im.max(p.im));
        }
        let mut stack: Vec<(u32, i64, i64)> = Vec::new();
        for i in (lo.re / s0).floor() as i64..=(hi.re / s0).floor() as i64 {
            for j in (lo.im / s0).floor() as i64..=(hi.im / s0).floor() as i64 {
                stack.push((0, i, j));
            }
        }
        let mut cubes = Vec::new();
        let mut layer_cells = 0usize;
        while let Some((level, i, j)) = stack.pop() {
            let side = s0 / 2f64.powi(level as i32);
            let clo = C64::new(i as f64 * side, j as f64 * side);
            let chi = clo + C64::new(side, side);
            let d = self.rect_distance(clo, chi);
            let center = 0.5 * (clo + chi);
            if d > 0.0 && !self.contains(center) {
                continue;
            }
            if d > 0.0 && d >= c_w * side {
                cubes.push(WhitneyCube {
                    level,
                    i,
                    j,
                    side,
                    center,
                    dist: d,
                });
                if cubes.len() > budget {
                    return Err(QcError::CubeBudget(cubes.len()));
                }
                continue;
            }
            if level == floor_level {
                layer_cells += 1;
                continue;
            }
            for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                stack.push((level + 1, 2 * i + di, 2 * j + dj));
            }
        }
        cubes.sort_by(|a, b| (a.level, a.j, a.i).cmp(&(b.level, b.j, b.i)));
        let neighbors = touching_graph(&cubes);
        Ok(WhitneyCovering {
            cubes,
            neighbors,
            c_w,
            top_side: s0,
            floor_level,
            floor_side: ell_floor,
            layer_cells,
        })
    }
}

/// D(A, B) = diam A + diam B + dist(A, B).
pub fn long_distance(diam_a: f64, diam_b: f64, dist: f64) -> f64 {
    diam_a + diam_b + dist
}

/// One dyadic cube of a covering.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WhitneyCube {
    /// Levels below the top cube size.
    pub level: u32,
    pub i: i64,
    pub j: i64,
    pub side: f64,
    pub center: C64,
    /// dist(Q, ∂Ω).
    pub dist: f64,
}

impl WhitneyCube {
    pub fn lo(&self) -> C64 {
        C64::new(self.i as f64 * self.side, self.j as f64 * self.side)
    }

    pub fn hi(&self) -> C64 {
        self.lo() + C64::new(self.side, self.side)
    }

    pub fn diam(&self) -> f64 {
        self.side * 2f64.sqrt()
    }

    pub fn area(&self) -> f64 {
        self.side * self.side
    }

    pub fn dist_to(&self, other: &WhitneyCube) -> f64 {
        rect_rect_distance(self.lo(), self.hi(), other.lo(), other.hi())
    }

    pub fn long_distance(&self, other: &WhitneyCube) -> f64 {
        long_distance(self.diam(), other.diam(), self.dist_to(other))
    }

    /// The cube dilated by `r` about its center, as (lo, hi).
    pub fn dilate(&self, r: f64) -> (C64, C64) {
        let h = 0.5 * r * self.side;
        (self.center - C64::new(h, h), self.center + C64::new(h, h))
    }

    pub fn contains_point(&self, z: C64) -> bool {
        let (lo, hi) = (self.lo(), self.hi());
        z.re >= lo.re && z.re < hi.re && z.im >= lo.im && z.im < hi.im
    }
}

fn touching_graph(cubes: &[WhitneyCube]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..cubes.len()).collect();
    order.sort_by(|&a, &b| cubes[a].lo().re.total_cmp(&cubes[b].lo().re));
    let mut nb = vec![Vec::new(); cubes.len()];
    let max_side = cubes.iter().map(|c| c.side).fold(0.0, f64::max);
    for (oi, &a) in order.iter().enumerate() {
        let ca = &cubes[a];
        for &b in &order[oi + 1..] {
            let cb = &cubes[b];
            if cb.lo().re > ca.hi().re + 1e-12 {
                break;
            }
            if cb.lo().re < ca.lo().re - max_side {
                continue;
            }
            if ca.dist_to(cb) <= 1e-12 {
                nb[a].push(b);
                nb[b].push(a);
            }
        }
    }
    for v in &mut nb {
        v.sort_unstable();
    }
    nb
}

/// A Whitney covering with its neighbor graph.
#[derive(Clone, Debug)]
pub struct WhitneyCovering {
    pub cubes: Vec<WhitneyCube>,
    pub neighbors: Vec<Vec<usize>>,
    pub c_w: f64,
    pub top_side: f64,
    pub floor_level: u32,
    pub floor_side: f64,
    /// Floor-level cells left unresolved near the boundary.
    pub layer_cells: usize,
}

/// Outcome of auditing the Whitney axioms.
#[derive(Clone, Debug, PartialEq)]
pub struct WhitneyAudit {
    pub disjoint: bool,
    pub sandwich_ok: bool,
    /// max #{Q : x ∈ 50Q} over cube centers.
    pub overlap_50: usize,
    /// Pairs S ⊂ 5Q with ℓ(S) < ℓ(Q)/2.
    pub five_q_violations: usize,
    pub total_area: f64,
}

/// A chain of touching cubes joining two cubes.
#[derive(Clone, Debug, PartialEq)]
pub struct Chain {
    pub cubes: Vec<usize>,
    pub central: usize,
}

impl WhitneyCovering {
    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn total_area(&self) -> f64 {
        self.cubes.iter().map(|c| c.area()).sum()
    }

    /// Index of the cube containing z.
    pub fn locate(&self, z: C64) -> Option<usize> {
        self.cubes.iter().position(|c| c.contains_point(z))
    }

    pub fn audit(&self) -> WhitneyAudit {
        let n = self.cubes.len();
        let mut disjoint = true;
        for a in 0..n {
            for &b in &self.neighbors[a] {
                let (ca, cb) = (&self.cubes[a], &self.cubes[b]);
                let ox = ca.hi().re.min(cb.hi().re) - ca.lo().re.max(cb.lo().re);
                let oy = ca.hi().im.min(cb.hi().im) - ca.lo().im.max(cb.lo().im);
                if ox > 1e-12 && oy > 1e-12 {
                    disjoint = false;
                }
            }
        }
        let sandwich_ok = self
            .cubes
            .iter()
            .all(|c| c.dist >= self.c_w * c.side && c.dist <= 4.0 * self.c_w * c.side);
        let mut overlap_50 = 0;
        for c in &self.cubes {
            let k = self
                .cubes
                .iter()
                .filter(|q| {
                    let (lo, hi) = q.dilate(50.0);
                    point_rect_distance(c.center, lo, hi) == 0.0
                })
                .count();
            overlap_50 = overlap_50.max(k);
        }
        let mut five_q_violations = 0;
        for q in &self.cubes {
            let (lo, hi) = q.dilate(5.0);
            for s in &self.cubes {
                let inside = s.lo().re >= lo.re - 1e-12
                    && s.lo().im >= lo.im - 1e-12
                    && s.hi().re <= hi.re + 1e-12
                    && s.hi().im <= hi.im + 1e-12;
                if inside && s.side < 0.5 * q.side {
                    five_q_violations += 1;
                }
            }
        }
        WhitneyAudit {
            disjoint,
            sandwich_ok,
            overlap_50,
            five_q_violations,
            total_area: self.total_area(),
        }
    }

    /// ℓ(Q)^η Σ_S ℓ(S)²/D(Q,S)^{2+η}.
    pub fn maximal_sum_far(&self, q: usize, eta: f64) -> f64 {
        let cq = &self.cubes[q];
        let s: f64 = self
            .cubes
            .iter()
            .map(|cs| cs.area() / cq.long_distance(cs).powf(2.0 + eta))
            .sum();
        s * cq.side.powf(eta)
    }

    /// r^{−η} Σ_{D(Q,S)<r} ℓ(S)²/D(Q,S)^{2−η}.
    pub fn maximal_sum_close(&self, q: usize, eta: f64, r: f64) -> f64 {
        let cq = &self.cubes[q];
        let s: f64 = self
            .cubes
            .iter()
            .map(|cs| (cs, cq.long_distance(cs)))
            .filter(|(_, d)| *d < r)
            .map(|(cs, d)| cs.area() / d.powf(2.0 - eta))
            .sum();
        s / r.powf(eta)
    }

    fn ascend(&self, start: usize, target: f64) -> Vec<usize> {
        let mut path = vec![start];
        let mut cur = start;
        while self.cubes[cur].dist < target {
            let next = self.neighbors[cur]
                .iter()
                .copied()
                .max_by(|&a, &b| self.cubes[a].dist.total_cmp(&self.cubes[b].dist));
            match next {
                Some(nx) if self.cubes[nx].dist > self.cubes[cur].dist => {
                    path.push(nx);
                    cur = nx;
                }
                _ => break,
            }
        }
        path
    }

    fn bfs(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let mut prev = vec![usize::MAX; self.cubes.len()];
        let mut queue = VecDeque::from([from]);
        prev[from] = from;
        while let Some(c) = queue.pop_front() {
            if c == to {
                let mut path = vec![to];
                let mut x = to;
                while x != from {
                    x = prev[x];
                    path.push(x);
                }
                path.reverse();
                return Some(path);
            }
            for &n in &self.neighbors[c] {
                if prev[n] == usize::MAX {
                    prev[n] = c;
                    queue.push_back(n);
                }
            }
        }
        None
    }

    /// Chain [Q, S]: ascend from both ends while the distance to the boundary
    /// grows up to D(Q,S)/2, then join the two tops by a shortest path.
    pub fn chain(&self, q: usize, s: usize) -> Result<Chain> {
        if q >= self.len() || s >= self.len() {
            return Err(invalid("cube index out of range"));
        }
        if q == s {
            return Ok(Chain {
                cubes: vec![q],
                central: 0,
            });
        }
        if self.neighbors[q].contains(&s) {
            let central = if self.cubes[s].side > self.cubes[q].side { 1 } else { 0 };
            return Ok(Chain {
                cubes: vec![q, s],
                central,
            });
        }
        let d = self.cubes[q].long_distance(&self.cubes[s]);
        let up_q = self.ascend(q, 0.5 * d);
        let up_s = self.ascend(s, 0.5 * d);
        let mid = self
            .bfs(*up_q.last().unwrap(), *up_s.last().unwrap())
            .ok_or(QcError::Disconnected)?;
        let mut seq = up_q.clone();
        seq.extend(&mid[1..]);
        seq.extend(up_s.iter().rev().skip(1));
        // cut loops
        let mut out: Vec<usize> = Vec::with_capacity(seq.len());
        for c in seq {
            if let Some(p) = out.iter().position(|&x| x == c) {
                out.truncate(p + 1);
            } else {
                out.push(c);
            }
        }
        let central = (0..out.len())
            .max_by(|&a, &b| self.cubes[out[a]].side.total_cmp(&self.cubes[out[b]].side))
            .unwrap();
        Ok(Chain { cubes: out, central })
    }

    /// Σ ℓ(P) / D(Q,S) over the chain.
    pub fn chain_length_ratio(&self, chain: &Chain) -> f64 {
        let (q, s) = (chain.cubes[0], *chain.cubes.last().unwrap());
        let total: f64 = chain.cubes.iter().map(|&c| self.cubes[c].side).sum();
        let d = if q == s {
            2.0 * self.cubes[q].diam()
        } else {
            self.cubes[q].long_distance(&self.cubes[s])
        };
        total / d
    }

    /// max over side lengths of #{P ∈ chain : ℓ(P) = ℓ₀}.
    pub fn chain_max_per_side(&self, chain: &Chain) -> usize {
        let mut counts = std::collections::HashMap::new();
        for &c in &chain.cubes {
            *counts.entry(self.cubes[c].level).or_insert(0usize) += 1;
        }
        counts.values().copied().max().unwrap_or(0)
    }

    /// CSV "level, i, j, side, dist".
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["level", "i", "j", "side", "dist"])?;
        for c in &self.cubes {
            wr.write_record(&[
                c.level.to_string(),
                c.i.to_string(),
                c.j.to_string(),
                c.side.to_string(),
                c.dist.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// θ ∈ [0, 2π) normalization.
pub fn wrap_angle(t: f64) -> f64 {
    t.rem_euclid(TAU)
}

/// Unit square [0,1]² as a polygon.
pub fn unit_square(m: usize) -> Result<BoundaryCurve> {
    BoundaryCurve::polygon(
        &[
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 1.0),
            C64::new(0.0, 1.0),
        ],
        m,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn disc(m: usize) -> JordanDomain {
        JordanDomain::new(BoundaryCurve::circle(C64::new(0.0, 0.0), 1.0, m).unwrap())
    }

    #[test]
    fn inside_unit_circle() {
        let d = disc(1024);
        assert_eq!(d.inside(C64::new(0.0, 0.0)), Membership::Inside);
        assert_eq!(d.inside(C64::new(2.0, 0.0)), Membership::Outside);
        assert_eq!(d.inside(C64::new(0.99, 0.0)), Membership::Inside);
        assert_eq!(d.inside(C64::new(1.0, 0.0)), Membership::Indeterminate);
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let c = BoundaryCurve::from_fn(64, |t| C64::from_polar(1.0, -t), |t| C64::new(0.0, -1.0) * C64::from_polar(1.0, -t)).unwrap();
        assert!(c.was_reoriented());
        assert!(c.signed_area() > 0.0);
        let p = BoundaryCurve::polygon(
            &[C64::new(0.0, 0.0), C64::new(0.0, 1.0), C64::new(1.0, 1.0), C64::new(1.0, 0.0)],
            64,
        )
        .unwrap();
        assert!(p.was_reoriented());
        assert!((p.signed_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn length_area_centroid() {
        let c = BoundaryCurve::ellipse(2.0, 1.0, 256).unwrap();
        assert!((c.signed_area() - 2.0 * PI).abs() < 1e-12);
        assert!(c.centroid().norm() < 1e-12);
        // ellipse perimeter, a = 2, b = 1
        assert!((c.length() - 9.688448220547675).abs() < 1e-9);
        let sq = unit_square(64).unwrap();
        assert!((sq.length() - 4.0).abs() < 1e-12);
        assert!((sq.centroid() - C64::new(0.5, 0.5)).norm() < 1e-12);
    }

    #[test]
    fn distance_queries() {
        let d = disc(256);
        for z in [C64::new(0.3, 0.1), C64::new(-0.2, 0.7), C64::new(1.5, -0.5)] {
            assert!((d.distance(z) - (1.0 - z.norm()).abs()).abs() < 1e-12);
        }
        let sq = JordanDomain::new(unit_square(64).unwrap());
        assert!((sq.distance(C64::new(0.25, 0.5)) - 0.25).abs() < 1e-14);
        let r = sq.rect_distance(C64::new(0.25, 0.25), C64::new(0.5, 0.5));
        assert!((r - 0.25).abs() < 1e-14);
        assert_eq!(sq.rect_distance(C64::new(-0.1, 0.2), C64::new(0.1, 0.3)), 0.0);
    }

    #[test]
    fn mask_area_matches_disc() {
        let spec = GridSpec::new(256, 2.0).unwrap();
        let m = disc(512).mask(spec);
        assert!((m.area() - PI).abs() < 0.05);
        let direct = RegionMask::disc(spec, C64::new(0.0, 0.0), 1.0);
        let diff = m.bits().iter().zip(direct.bits()).filter(|(a, b)| a != b).count();
        assert!(diff < 20, "{diff}");
    }

    #[test]
    fn windows_on_circle() {
        let d = disc(512);
        let w = d.build_windows(0.5, 1.0).unwrap();
        assert!(!w.is_empty());
        for win in &w {
            let e = win.eps / 3.0;
            for k in 0..=50 {
                let u = -e + 2.0 * e * k as f64 / 50.0;
                let h = 1e-5;
                let s = (win.graph(u + h) - win.graph(u - h)) / (2.0 * h);
                assert!(s.abs() <= 0.6);
                // circle graph in the tangent frame: R − √(R² − u²) above... below the chord
                let exact = 1.0 - (1.0 - u * u).sqrt();
                assert!((win.graph(u) - exact).abs() < 1e-10);
            }
        }
        assert!(d.window_overlap(&w) <= 12);
    }

    #[test]
    fn windows_on_large_arc_are_affine() {
        let d = JordanDomain::new(BoundaryCurve::circle(C64::new(0.0, 0.0), 1e6, 4096).unwrap());
        let win = d.window_at(0.0, 0.5, 1.0, 0.5 / 2f64.sqrt()).unwrap();
        for &u in &[-0.3, -0.1, 0.0, 0.2, 0.33] {
            assert!(win.graph(u).abs() < 1e-6);
        }
        let (a, b) = (win.graph(-0.2), win.graph(0.2));
        assert!((win.graph(0.0) - 0.5 * (a + b)).abs() < 1e-7);
    }

    #[test]
    fn ellipse_windows_cover() {
        let d = JordanDomain::new(BoundaryCurve::ellipse(2.0, 1.0, 512).unwrap());
        let w = d.build_windows(0.5, 1.0).unwrap();
        let cover_ok = d
            .curve()
            .points()
            .iter()
            .all(|&p| w.iter().any(|x| (x.center - p).norm() < x.eps / 6.0));
        assert!(cover_ok);
        assert!(d.window_overlap(&w) <= 12);
    }

    #[test]
    fn whitney_unit_square() {
        let sq = JordanDomain::new(unit_square(256).unwrap());
        let cov = sq.whitney_covering(1.0, 7).unwrap();
        for (i, j) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            assert!(
                cov.cubes.iter().any(|c| c.side == 0.25 && c.i == i && c.j == j),
                "missing central cube ({i},{j})"
            );
        }
        let a = cov.audit();
        assert!(a.disjoint && a.sandwich_ok);
        let deficit = 1.0 - a.total_area;
        assert!(deficit >= -1e-12 && deficit <= 8.0 * 4.0 * cov.floor_side, "{deficit}");
    }

    #[test]
    fn whitney_disc_sandwich_and_five_q() {
        let d = disc(512);
        let cov = d.whitney_covering(6.5, 9).unwrap();
        let a = cov.audit();
        assert!(a.disjoint && a.sandwich_ok);
        assert_eq!(a.five_q_violations, 0);
    }

    #[test]
    fn long_distance_cases() {
        assert_eq!(long_distance(1.0, 1.0, 0.0), 2.0);
        assert_eq!(long_distance(0.0, 0.0, 3.5), 3.5);
        let a = WhitneyCube { level: 0, i: 0, j: 0, side: 1.0, center: C64::new(0.5, 0.5), dist: 1.0 };
        let b = WhitneyCube { level: 0, i: 10, j: 0, side: 1.0, center: C64::new(10.5, 0.5), dist: 1.0 };
        assert!((a.long_distance(&b) - (2.0 * 2f64.sqrt() + 9.0)).abs() < 1e-14);
        assert!((a.long_distance(&a) - 2.0 * a.diam()).abs() < 1e-14);
    }

    #[test]
    fn chains_in_square() {
        let sq = JordanDomain::new(unit_square(256).unwrap());
        let cov = sq.whitney_covering(1.0, 7).unwrap();
        let q = cov.locate(C64::new(0.02, 0.02)).unwrap();
        let s = cov.locate(C64::new(0.97, 0.96)).unwrap();
        let ch = cov.chain(q, s).unwrap();
        for w in ch.cubes.windows(2) {
            assert!(cov.neighbors[w[0]].contains(&w[1]));
        }
        assert!(cov.chain_length_ratio(&ch) <= 10.0);
        assert_eq!(cov.chain(q, q).unwrap().cubes, vec![q]);
        let nb = cov.neighbors[q][0];
        assert!(cov.chain(q, nb).unwrap().cubes.len() <= 3);
    }

    #[test]
    fn shadow_cases() {
        let d = disc(512);
        let spec = GridSpec::new(128, 1.5).unwrap();
        let whole = d.shadow(C64::new(0.0, 0.0), 3.0, spec);
        assert_eq!(whole.count(), d.mask(spec).count());
        let a = d.shadow(C64::new(0.8, 0.0), 1.0, spec);
        let b = d.shadow(C64::new(0.8, 0.0), 2.0, spec);
        assert!(a.count() <= b.count());
        assert!((a.area() - PI * 0.04).abs() < 0.02);
    }

    #[test]
    fn arc_length_of_limacon() {
        let c = BoundaryCurve::limacon(0.1, 256).unwrap();
        let (r, dev) = c.arc_length_reparameterize().unwrap();
        assert!(dev < 1e-6, "{dev}");
        let circle = BoundaryCurve::circle(C64::new(0.0, 0.0), 1.0, 64).unwrap();
        let (rc, _) = circle.arc_length_reparameterize().unwrap();
        for (a, b) in rc.points().iter().zip(circle.points()) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!((r.length() - c.length()).abs() < 1e-10);
    }

    #[test]
    fn curve_csv_round_trip() {
        let c = BoundaryCurve::limacon(0.1, 32).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let d = BoundaryCurve::read_csv(&buf[..]).unwrap();
        for (a, b) in c.points().iter().zip(d.points()) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
