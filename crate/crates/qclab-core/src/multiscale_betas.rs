//! Dorronsoro β-coefficients on intervals and on Whitney cubes, half-plane
//! fits, and Meyers polynomials.

use std::cell::RefCell;
use std::collections::HashMap;
use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::domain_geometry::{JordanDomain, Window, WhitneyCovering, WhitneyCube};
use crate::error::{invalid, QcError, Result};
use crate::grid_field::GridField;
use crate::quadrature::{gauss_legendre, gauss_legendre_on};
use crate::C64;

/// Real data on (part of) the line.
pub trait LineData {
    fn value(&self, x: f64) -> f64;
    fn support(&self) -> (f64, f64);
}

/// A closure with a declared support.
pub struct LineFn<F> {
    pub f: F,
    pub support: (f64, f64),
}

impl<F: Fn(f64) -> f64> LineFn<F> {
    pub fn new(f: F, support: (f64, f64)) -> Self {
        Self { f, support }
    }
}

impl<F: Fn(f64) -> f64> LineData for LineFn<F> {
    fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }
    fn support(&self) -> (f64, f64) {
        self.support
    }
}

/// Uniform samples read through 6-point Lagrange interpolation.
#[derive(Clone, Debug)]
pub struct SampledLine {
    x0: f64,
    dx: f64,
    values: Vec<f64>,
}

impl SampledLine {
    pub fn new(x0: f64, dx: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 6 || !(dx > 0.0) {
            return Err(invalid("need at least 6 samples and a positive spacing"));
        }
        Ok(Self { x0, dx, values })
    }

    pub fn from_fn(a: f64, b: f64, count: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let dx = (b - a) / (count.max(2) - 1) as f64;
        Self::new(a, dx, (0..count).map(|i| f(a + i as f64 * dx)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

pub(crate) fn lagrange6(values: &[f64], x0: f64, dx: f64, u: f64) -> f64 {
    const DEN: [f64; 6] = [-120.0, 24.0, -12.0, 12.0, -24.0, 120.0];
    let n = values.len();
    let x = (u - x0) / dx;
    let base = (x.floor() as i64 - 2).clamp(0, n as i64 - 6) as usize;
    let t = x - base as f64;
    let mut diffs = [0.0; 6];
    let mut prod = 1.0;
    for (i, d) in diffs.iter_mut().enumerate() {
        *d = t - i as f64;
        if *d == 0.0 {
            return values[base + i];
        }
        prod *= *d;
    }
    let mut s = 0.0;
    for i in 0..6 {
        s += values[base + i] / (diffs[i] * DEN[i]);
    }
    s * prod
}

impl LineData for SampledLine {
    fn value(&self, x: f64) -> f64 {
        lagrange6(&self.values, self.x0, self.dx, x)
    }
    fn support(&self) -> (f64, f64) {
        (self.x0, self.x0 + self.dx * (self.values.len() - 1) as f64)
    }
}

impl LineData for Window {
    fn value(&self, x: f64) -> f64 {
        self.graph(x)
    }
    fn support(&self) -> (f64, f64) {
        self.graph_span()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    /// rI with the same center.
    pub fn dilate(&self, r: f64) -> Interval {
        let (c, h) = (self.center(), 0.5 * r * self.len());
        Interval::new(c - h, c + h)
    }
}

/// Σ c_k t^k with t = (x − center)/half.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly1 {
    pub center: f64,
    pub half: f64,
    pub coeffs: Vec<f64>,
}

impl Poly1 {
    pub fn eval(&self, x: f64) -> f64 {
        let t = (x - self.center) / self.half;
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    /// Value and slope in x at the center.
    pub fn line_at_center(&self) -> (f64, f64) {
        let c0 = self.coeffs.first().copied().unwrap_or(0.0);
        let c1 = self.coeffs.get(1).copied().unwrap_or(0.0);
        (c0, c1 / self.half)
    }
}

fn gl4() -> &'static (Vec<f64>, Vec<f64>) {
    use std::sync::OnceLock;
    static R: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    R.get_or_init(|| gauss_legendre(4))
}

#[cfg(test)]
fn panel_integral(g: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let (x, w) = gl4();
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(w) {
            s += wi * g(c + 0.5 * h * xi);
        }
    }
    0.5 * h * s
}

fn gated(mut eval: impl FnMut(usize) -> f64, base: usize, floor: f64) -> f64 {
    let mut n = base;
    let mut prev = eval(n);
    for _ in 0..5 {
        n *= 2;
        let cur = eval(n);
        if (cur - prev).abs() <= 1e-6 * cur.abs() + floor {
            return cur;
        }
        prev = cur;
    }
    prev
}

// ∫|g| on panels, splitting a panel at each sign change of g
fn abs_integral(g: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let (x, w) = gl4();
    let piece = |lo: f64, hi: f64| -> f64 {
        let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        h * x.iter().zip(w).map(|(xi, wi)| wi * g(c + h * xi).abs()).sum::<f64>()
    };
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    let mut lo = a;
    let mut glo = g(a);
    for p in 0..panels {
        let hi = if p + 1 == panels { b } else { a + (p + 1) as f64 * h };
        let ghi = g(hi);
        if glo * ghi < 0.0 {
            // Illinois false position
            let (mut x0, mut x1, mut f0, mut f1) = (lo, hi, glo, ghi);
            let mut side = 0i32;
            let mut r = 0.5 * (lo + hi);
            for _ in 0..60 {
                r = (x0 * f1 - x1 * f0) / (f1 - f0);
                let fr = g(r);
                if fr == 0.0 || (x1 - x0).abs() < 1e-15 * (1.0 + r.abs()) {
                    break;
                }
                if fr * f1 > 0.0 {
                    x1 = r;
                    f1 = fr;
                    if side == -1 {
                        f0 *= 0.5;
                    }
                    side = -1;
                } else {
                    x0 = r;
                    f0 = fr;
                    if side == 1 {
                        f1 *= 0.5;
                    }
                    side = 1;
                }
            }
            s += piece(lo, r) + piece(r, hi);
        } else {
            s += piece(lo, hi);
        }
        lo = hi;
        glo = ghi;
    }
    s
}

fn check_support(f: &dyn LineData, i: Interval) -> Result<()> {
    let (lo, hi) = f.support();
    let big = i.dilate(3.0);
    let slack = 1e-12 * (1.0 + i.len());
    if big.a < lo - slack || big.b > hi + slack {
        return Err(invalid(format!(
            "data on [{lo}, {hi}] does not cover 3I = [{}, {}]",
            big.a, big.b
        )));
    }
    Ok(())
}

// ∫_I f t^r, r < k, with t the centered variable on I
fn moments(f: &dyn LineData, i: Interval, k: usize, panels: usize) -> Vec<f64> {
    let (x, w) = gl4();
    let (c, half) = (i.center(), 0.5 * i.len());
    let h = i.len() / panels as f64;
    let mut out = vec![0.0; k];
    for p in 0..panels {
        let mid = i.a + (p as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(w) {
            let xx = mid + 0.5 * h * xi;
            let t = (xx - c) / half;
            let mut v = wi * f.value(xx);
            for o in out.iter_mut() {
                *o += v;
                v *= t;
            }
        }
    }
    out.iter().map(|v| 0.5 * h * v).collect()
}

/// R^n_I f: the polynomial of degree ≤ n with ∫_I (R − f) x^j = 0, j ≤ n.
pub fn dorronsoro_poly(f: &dyn LineData, i: Interval, n: usize) -> Result<Poly1> {
    if n > 3 {
        return Err(invalid("degree above 3 is not supported"));
    }
    if !(i.len() > 0.0) {
        return Err(invalid("empty interval"));
    }
    check_support(f, i)?;
    let (c, half) = (i.center(), 0.5 * i.len());
    let k = n + 1;
    let gram = DMatrix::from_fn(k, k, |r, s| {
        let e = r + s;
        if e % 2 == 1 { 0.0 } else { half * 2.0 / (e + 1) as f64 }
    });
    let scale = f.value(c).abs() + f.value(i.a).abs() + f.value(i.b).abs();
    let floor = 1e-15 * i.len() * (1.0 + scale);
    let mut prev = moments(f, i, k, 32);
    let mut panels = 32;
    for _ in 0..5 {
        panels *= 2;
        let cur = moments(f, i, k, panels);
        let done = cur.iter().zip(&prev).all(|(a, b)| (a - b).abs() <= 1e-6 * a.abs() + floor);
        prev = cur;
        if done {
            break;
        }
    }
    let rhs = DVector::from_vec(prev);
    let coeffs = gram
        .lu()
        .solve(&rhs)
        .ok_or_else(|| QcError::IllConditioned(f64::INFINITY))?;
    Ok(Poly1 {
        center: c,
        half,
        coeffs: coeffs.iter().copied().collect(),
    })
}

/// (1/ℓ)∫_{3I}|f − P|/ℓ for a given polynomial P.
pub fn beta_against(f: &dyn LineData, i: Interval, p: &Poly1) -> f64 {
    let big = i.dilate(3.0);
    let ell = i.len();
    let g = |x: f64| f.value(x) - p.eval(x);
    let scale = f.value(big.a).abs() + f.value(big.b).abs() + f.value(i.center()).abs();
    let floor = 1e-13 * big.len() * (1.0 + scale);
    gated(|m| abs_integral(&g, big.a, big.b, m), 64, floor) / (ell * ell)
}

/// β_(n)(f, I).
pub fn beta_interval(f: &dyn LineData, i: Interval, n: usize) -> Result<f64> {
    let p = dorronsoro_poly(f, i, n)?;
    Ok(beta_against(f, i, &p))
}

/// Dyadic β-sum with its per-level contributions.
#[derive(Clone, Debug, PartialEq)]
pub struct BetaBesov {
    pub value: f64,
    /// (j, ℓ = 2^{−j}, level contribution): Σ_I (β/ℓ^{s−1})^p ℓ, or the level sup for p = ∞.
    pub levels: Vec<(i32, f64, f64)>,
    pub coarsest: f64,
    pub finest: f64,
}

/// (Σ_I (β_(n)(f,I)/ℓ^{s−1})^p ℓ)^{1/p} over dyadic I with 3I inside the
/// support, from the coarsest fitting level down to ℓ = 2^{−floor}.
pub fn besov_from_betas(f: &dyn LineData, s: f64, p: f64, n: usize, floor: i32) -> Result<BetaBesov> {
    if !(s > 0.0 && s < (n + 1) as f64) {
        return Err(invalid("need 0 < s < n + 1"));
    }
    if !(p >= 1.0) {
        return Err(invalid("need p ≥ 1"));
    }
    let (lo, hi) = f.support();
    let j0 = (-((hi - lo) / 3.0).log2()).ceil() as i32;
    if j0 > floor {
        return Err(invalid("floor is coarser than the support allows"));
    }
    let mut levels = Vec::new();
    let mut total = 0.0f64;
    for j in j0..=floor {
        let ell = 2f64.powi(-j);
        let mut acc = 0.0f64;
        let k0 = ((lo + ell) / ell).ceil() as i64;
        let k1 = ((hi - 2.0 * ell) / ell).floor() as i64;
        for k in k0..=k1 {
            let i = Interval::new(k as f64 * ell, (k + 1) as f64 * ell);
            if check_support(f, i).is_err() {
                continue;
            }
            let b = beta_interval(f, i, n)? / ell.powf(s - 1.0);
            if p.is_infinite() {
                acc = acc.max(b);
            } else {
                acc += b.powf(p) * ell;
            }
        }
        if p.is_infinite() {
            total = total.max(acc);
        } else {
            total += acc;
        }
        levels.push((j, ell, acc));
    }
    Ok(BetaBesov {
        value: if p.is_infinite() { total } else { total.powf(1.0 / p) },
        levels,
        coarsest: 2f64.powi(-j0),
        finest: 2f64.powi(-floor),
    })
}

/// Constants fixing admissibility and the oversized-cube cutoff.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaConfig {
    /// Window size R.
    pub r: f64,
    /// Initial Lipschitz bound δ for the windows.
    pub delta: f64,
    /// Admissible pairs need D(Q, U_J) ≤ admissible·ℓ(Q).
    pub admissible: f64,
    /// ρ in ρP ⊃ Q.
    pub rho: f64,
    /// Cubes with ℓ(Q) > C_Ω get β = 1.
    pub c_omega: f64,
}

impl BetaConfig {
    pub fn new(r: f64, delta: f64) -> Self {
        Self {
            r,
            delta,
            admissible: 8.0,
            rho: 6.0,
            c_omega: r / 10.0,
        }
    }
}

/// A window and an interval of its graph parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmissiblePair {
    pub window: usize,
    pub interval: Interval,
}

/// {z : Re((z − point)·conj(normal)) < 0}; `normal` is the outward unit normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfPlane {
    pub point: C64,
    pub normal: C64,
}

impl HalfPlane {
    /// Signed distance, negative inside.
    pub fn signed_distance(&self, z: C64) -> f64 {
        ((z - self.point) * self.normal.conj()).re
    }

    pub fn contains(&self, z: C64) -> bool {
        self.signed_distance(z) < 0.0
    }

    pub fn rect_distance(&self, lo: C64, hi: C64) -> f64 {
        [lo, hi, C64::new(lo.re, hi.im), C64::new(hi.re, lo.im)]
            .iter()
            .map(|&c| -self.signed_distance(c))
            .fold(f64::INFINITY, f64::min)
    }
}

/// β_(n)(Q) together with the pair attaining it (none for oversized cubes).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubeBeta {
    pub beta: f64,
    pub pair: Option<AdmissiblePair>,
}

/// Windows of a domain plus a cache of window-interval β's.
pub struct BetaEngine<'a> {
    domain: &'a JordanDomain,
    windows: Vec<Window>,
    config: BetaConfig,
    cache: RefCell<HashMap<(usize, i32, i64, usize), f64>>,
}

impl<'a> BetaEngine<'a> {
    pub fn new(domain: &'a JordanDomain, config: BetaConfig) -> Result<Self> {
        let windows = domain.build_windows(config.r, config.delta)?;
        Ok(Self {
            domain,
            windows,
            config,
            cache: RefCell::new(HashMap::new()),
        })
    }

    pub fn windows(&self) -> &[Window] {
        &self.windows
    }

    pub fn config(&self) -> &BetaConfig {
        &self.config
    }

    pub fn domain(&self) -> &JordanDomain {
        self.domain
    }

    /// Admissible pairs for Q: J = [kℓ/2, kℓ/2 + ℓ] inside [−ε_δ/3, ε_δ/3]
    /// with D(Q, U_J) ≤ admissible·ℓ(Q).
    pub fn admissible_pairs(&self, q: &WhitneyCube) -> Vec<(AdmissiblePair, i64)> {
        let ell = q.side;
        let (qlo, qhi) = (q.lo(), q.hi());
        let mut out = Vec::new();
        for (wi, w) in self.windows.iter().enumerate() {
            let cl = w.to_local(q.center);
            let lim = w.eps / 3.0;
            if cl.re.abs() > lim + self.config.admissible * ell || cl.im.abs() > w.eps {
                continue;
            }
            let kmin = ((-lim).max(cl.re - self.config.admissible * ell) / (0.5 * ell)).ceil() as i64;
            let kmax = ((lim - ell).min(cl.re + self.config.admissible * ell) / (0.5 * ell)).floor() as i64;
            for k in kmin..=kmax {
                let a = k as f64 * 0.5 * ell;
                let pts: Vec<C64> = (0..=8)
                    .map(|s| {
                        let u = a + ell * s as f64 / 8.0;
                        w.to_global(C64::new(u, w.graph(u)))
                    })
                    .collect();
                let mut diam: f64 = 0.0;
                for x in &pts {
                    for y in &pts {
                        diam = diam.max((x - y).norm());
                    }
                }
                let dist = pts.iter().map(|&p| point_rect_distance(p, qlo, qhi)).fold(f64::INFINITY, f64::min);
                if q.diam() + diam + dist <= self.config.admissible * ell {
                    out.push((
                        AdmissiblePair {
                            window: wi,
                            interval: Interval::new(a, a + ell),
                        },
                        k,
                    ));
                }
            }
        }
        out
    }

    fn pair_beta(&self, pair: &AdmissiblePair, level: i32, k: i64, n: usize) -> Result<f64> {
        let key = (pair.window, level, k, n);
        if let Some(&b) = self.cache.borrow().get(&key) {
            return Ok(b);
        }
        let b = beta_interval(&self.windows[pair.window], pair.interval, n)?;
        self.cache.borrow_mut().insert(key, b);
        Ok(b)
    }

    /// β_(n)(Q) = max over admissible pairs; 1 when ℓ(Q) > C_Ω.
    pub fn beta_cube(&self, q: &WhitneyCube, n: usize) -> Result<CubeBeta> {
        if q.side > self.config.c_omega {
            return Ok(CubeBeta { beta: 1.0, pair: None });
        }
        self.beta_over(q, n, &self.admissible_pairs(q))
    }

    fn beta_over(&self, q: &WhitneyCube, n: usize, pairs: &[(AdmissiblePair, i64)]) -> Result<CubeBeta> {
        if q.side > self.config.c_omega {
            return Ok(CubeBeta { beta: 1.0, pair: None });
        }
        if pairs.is_empty() {
            return Err(QcError::NoAdmissiblePair(format!(
                "cube level {} at ({}, {}), side {}",
                q.level, q.i, q.j, q.side
            )));
        }
        let level = -(q.side.log2().round() as i32);
        let mut scored = Vec::with_capacity(pairs.len());
        for &(pair, k) in pairs {
            scored.push((pair, self.pair_beta(&pair, level, k, n)?));
        }
        let top = scored.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        // near-ties are common on symmetric arcs; prefer the arc closest to Q
        // so that Π_Q does not hop between equivalent pairs
        let closeness = |p: &AdmissiblePair| {
            let w = &self.windows[p.window];
            let u = p.interval.center();
            (w.to_global(C64::new(u, w.graph(u))) - q.center).norm()
        };
        let pair = scored
            .iter()
            .filter(|s| s.1 >= top - 1e-6 * top.abs() - 1e-15)
            .min_by(|a, b| closeness(&a.0).total_cmp(&closeness(&b.0)))
            .map(|s| s.0);
        Ok(CubeBeta { beta: top, pair })
    }

    /// Π_Q: the β_(1) minimizing line of the attaining pair, oriented so that
    /// Q ⊂ Π_Q. Oversized cubes use the tangent line at the nearest boundary point.
    pub fn half_plane_fit(&self, q: &WhitneyCube) -> Result<HalfPlane> {
        let cb = self.beta_cube(q, 1)?;
        self.half_plane_from(q, &cb)
    }

    fn half_plane_from(&self, q: &WhitneyCube, cb: &CubeBeta) -> Result<HalfPlane> {
        let hp = match cb.pair {
            Some(pair) => {
                let w = &self.windows[pair.window];
                let poly = dorronsoro_poly(w, pair.interval, 1)?;
                let (v, slope) = poly.line_at_center();
                let point = w.to_global(C64::new(poly.center, v));
                let tangent = w.frame * C64::new(1.0, slope) / (1.0 + slope * slope).sqrt();
                // Ω sits above the graph, so the outward normal is −i·tangent
                HalfPlane {
                    point,
                    normal: C64::new(0.0, -1.0) * tangent,
                }
            }
            None => {
                let poly = self.domain.polyline();
                let p = poly
                    .iter()
                    .copied()
                    .min_by(|a, b| (a - q.center).norm().total_cmp(&(b - q.center).norm()))
                    .ok_or_else(|| invalid("empty curve"))?;
                let d = p - q.center;
                HalfPlane {
                    point: p,
                    normal: d / d.norm(),
                }
            }
        };
        Ok(if hp.contains(q.center) {
            hp
        } else {
            HalfPlane {
                point: hp.point,
                normal: -hp.normal,
            }
        })
    }
}

fn point_rect_distance(p: C64, lo: C64, hi: C64) -> f64 {
    let dx = (lo.re - p.re).max(0.0).max(p.re - hi.re);
    let dy = (lo.im - p.im).max(0.0).max(p.im - hi.im);
    dx.hypot(dy)
}

/// Lookup of covering cubes by (level, i, j).
pub struct CubeLookup<'c> {
    covering: &'c WhitneyCovering,
    map: HashMap<(u32, i64, i64), usize>,
}

impl<'c> CubeLookup<'c> {
    pub fn new(covering: &'c WhitneyCovering) -> Self {
        let map = covering
            .cubes
            .iter()
            .enumerate()
            .map(|(k, c)| ((c.level, c.i, c.j), k))
            .collect();
        Self { covering, map }
    }

    /// Cubes P with ρP ⊃ Q and ℓ(P) ≤ max_side.
    pub fn dilates_containing(&self, q: &WhitneyCube, rho: f64, max_side: f64) -> Vec<usize> {
        let mut out = Vec::new();
        let (qlo, qhi) = (q.lo(), q.hi());
        let top = self.covering.top_side;
        for level in 0..=self.covering.floor_level {
            let side = top / 2f64.powi(level as i32);
            if side > max_side * (1.0 + 1e-12) {
                continue;
            }
            if rho * side < q.side * (1.0 - 1e-12) {
                break;
            }
            let reach = 0.5 * rho * side;
            let irange = ((qhi.re - reach) / side - 1.0).floor() as i64..=((qlo.re + reach) / side).ceil() as i64;
            let jrange = ((qhi.im - reach) / side - 1.0).floor() as i64..=((qlo.im + reach) / side).ceil() as i64;
            for i in irange {
                for j in jrange.clone() {
                    if let Some(&k) = self.map.get(&(level, i, j)) {
                        let (plo, phi) = self.covering.cubes[k].dilate(rho);
                        let eps = 1e-12 * side;
                        if plo.re <= qlo.re + eps && plo.im <= qlo.im + eps && phi.re >= qhi.re - eps && phi.im >= qhi.im - eps {
                            out.push(k);
                        }
                    }
                }
            }
        }
        out
    }
}

/// One row of a β table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaRow {
    pub cube: usize,
    pub side: f64,
    pub beta1: CubeBeta,
    pub beta2: CubeBeta,
    pub half_plane: HalfPlane,
}

/// β_(1), β_(2) and Π_Q for every cube of a covering.
#[derive(Clone, Debug)]
pub struct BetaTable {
    pub rows: Vec<BetaRow>,
    pub config: BetaConfig,
    pub floor_side: f64,
    /// β_(n)(A_j, J) for every window-interval pair that was evaluated:
    /// (window, J, n, β).
    pub intervals: Vec<(usize, Interval, usize, f64)>,
}

impl BetaTable {
    pub fn build(engine: &BetaEngine<'_>, covering: &WhitneyCovering) -> Result<Self> {
        let mut rows = Vec::with_capacity(covering.len());
        for (k, q) in covering.cubes.iter().enumerate() {
            let pairs = if q.side > engine.config.c_omega { Vec::new() } else { engine.admissible_pairs(q) };
            let beta1 = engine.beta_over(q, 1, &pairs)?;
            let beta2 = engine.beta_over(q, 2, &pairs)?;
            let half_plane = engine.half_plane_from(q, &beta1)?;
            rows.push(BetaRow {
                cube: k,
                side: q.side,
                beta1,
                beta2,
                half_plane,
            });
        }
        let cache = engine.cache.borrow();
        let mut intervals: Vec<(usize, Interval, usize, f64)> = cache
            .iter()
            .map(|(&(w, level, k, n), &b)| {
                let ell = 2f64.powi(-level);
                let a = k as f64 * 0.5 * ell;
                (w, Interval::new(a, a + ell), n, b)
            })
            .collect();
        intervals.sort_by(|x, y| (x.0, x.2).cmp(&(y.0, y.2)).then(x.1.a.total_cmp(&y.1.a)).then(x.1.len().total_cmp(&y.1.len())));
        Ok(Self {
            rows,
            config: *engine.config(),
            floor_side: covering.floor_side,
            intervals,
        })
    }

    pub fn beta(&self, cube: usize, n: usize) -> f64 {
        match n {
            1 => self.rows[cube].beta1.beta,
            _ => self.rows[cube].beta2.beta,
        }
    }

    /// CSV "cube_id,side,beta1,beta2,pi_point_re,pi_point_im,pi_normal_re,pi_normal_im".
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["cube_id", "side", "beta1", "beta2", "pi_point_re", "pi_point_im", "pi_normal_re", "pi_normal_im"])?;
        for r in &self.rows {
            wr.write_record(&[
                r.cube.to_string(),
                r.side.to_string(),
                r.beta1.beta.to_string(),
                r.beta2.beta.to_string(),
                r.half_plane.point.re.to_string(),
                r.half_plane.point.im.to_string(),
                r.half_plane.normal.re.to_string(),
                r.half_plane.normal.im.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Boundary norm from cube β's with partial sums by maximal level.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryBetaNorm {
    pub value: f64,
    /// (level, value using cubes of level ≤ that level).
    pub by_floor: Vec<(u32, f64)>,
}

/// (Σ_Q β_(k)(Q)^p ℓ(Q)^{1−sp})^{1/p} + H¹(∂Ω)^{1/p}.
pub fn boundary_norm_from_betas(
    table: &BetaTable,
    covering: &WhitneyCovering,
    domain: &JordanDomain,
    s: f64,
    p: f64,
    k: usize,
) -> Result<BoundaryBetaNorm> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(invalid("need 1 ≤ p < ∞"));
    }
    let length_term = domain.curve().length().powf(1.0 / p);
    let mut per_level = vec![0.0f64; covering.floor_level as usize + 1];
    for r in &table.rows {
        let q = &covering.cubes[r.cube];
        per_level[q.level as usize] += table.beta(r.cube, k).powf(p) * q.side.powf(1.0 - s * p);
    }
    let mut acc = 0.0;
    let mut by_floor = Vec::new();
    for (level, v) in per_level.iter().enumerate() {
        acc += v;
        by_floor.push((level as u32, acc.powf(1.0 / p) + length_term));
    }
    Ok(BoundaryBetaNorm {
        value: acc.powf(1.0 / p) + length_term,
        by_floor,
    })
}

/// Both sides of the β-sum estimate: lhs = Σ_Q ℓ(Q)^{2+(ℓ−s)p}((Σ_{ρP⊃Q, ℓ(P)≤2R}
/// β_(1)(P)/ℓ(P)^ℓ)^p + 1) and rhs = ‖ν‖^p in the trace space of smoothness
/// s − 1/p.
pub fn beta_sum_lemma_check(
    table: &BetaTable,
    covering: &WhitneyCovering,
    domain: &JordanDomain,
    s: f64,
    p: f64,
    ell: f64,
) -> Result<(f64, f64)> {
    if !(ell > s) {
        return Err(invalid("need ℓ > s"));
    }
    let lookup = CubeLookup::new(covering);
    let cap = 2.0 * table.config.r;
    let mut lhs = 0.0;
    for q in &covering.cubes {
        let inner: f64 = lookup
            .dilates_containing(q, table.config.rho, cap)
            .iter()
            .map(|&k| table.beta(k, 1) / covering.cubes[k].side.powf(ell))
            .sum();
        lhs += q.side.powf(2.0 + (ell - s) * p) * (inner.powf(p) + 1.0);
    }
    let curve = domain.curve();
    let (arc, _) = curve.arc_length_reparameterize()?;
    let nu: Vec<C64> = arc
        .derivatives()
        .iter()
        .map(|d| C64::new(0.0, -1.0) * d / d.norm())
        .collect();
    let rhs = crate::norm_estimators::periodic_besov_norm(&nu, s - 1.0 / p, p)?.powf(p);
    Ok((lhs, rhs))
}

/// lhs = ∫_{ΩΔΠ_Q}|z − x|^{−2−η} at x = center(Q) by ray integration, and
/// rhs = Σ_{ρP⊃Q, ℓ(P)≤ℓ₀} β_(1)(P)/ℓ(P)^η + ℓ₀^{−η}.
pub fn flatness_bound_check(
    engine: &BetaEngine<'_>,
    table: &BetaTable,
    covering: &WhitneyCovering,
    cube: usize,
    eta: f64,
    ell0: f64,
) -> Result<(f64, f64)> {
    if !(eta > 0.0 && ell0 > 0.0) {
        return Err(invalid("need η > 0 and ℓ₀ > 0"));
    }
    let q = &covering.cubes[cube];
    let x = q.center;
    let hp = table.rows[cube].half_plane;
    let poly = engine.domain().polyline();
    let rays = 4096;
    let mut lhs = 0.0;
    let tail = |r: f64| r.powf(-eta) / eta;
    for k in 0..rays {
        let e = C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / rays as f64);
        let mut cross: Vec<f64> = Vec::new();
        for i in 0..poly.len() {
            if let Some(r) = ray_segment(x, e, poly[i], poly[(i + 1) % poly.len()]) {
                cross.push(r);
            }
        }
        cross.sort_by(f64::total_cmp);
        let out_speed = (e * hp.normal.conj()).re;
        let r_line = if out_speed > 0.0 { -hp.signed_distance(x) / out_speed } else { f64::INFINITY };
        // walk the events; both indicators start at 1
        let mut in_omega = true;
        let mut in_pi = true;
        let mut r_prev = 0.0;
        let mut events: Vec<(f64, bool)> = cross.into_iter().map(|r| (r, true)).collect();
        if r_line.is_finite() {
            events.push((r_line, false));
            events.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        let mut acc = 0.0;
        for (r, is_curve) in events {
            if in_omega != in_pi {
                acc += tail(r_prev) - tail(r);
            }
            if is_curve {
                in_omega = !in_omega;
            } else {
                in_pi = false;
            }
            r_prev = r;
        }
        if in_omega != in_pi {
            acc += tail(r_prev);
        }
        lhs += acc;
    }
    lhs *= std::f64::consts::TAU / rays as f64;
    let lookup = CubeLookup::new(covering);
    let rhs = lookup
        .dilates_containing(q, table.config.rho, ell0)
        .iter()
        .map(|&k| table.beta(k, 1) / covering.cubes[k].side.powf(eta))
        .sum::<f64>()
        + ell0.powf(-eta);
    Ok((lhs, rhs))
}

fn ray_segment(x: C64, e: C64, a: C64, b: C64) -> Option<f64> {
    let d = b - a;
    let den = (e.conj() * d).im;
    if den.abs() < 1e-300 {
        return None;
    }
    let w = a - x;
    let r = (w.conj() * d).im / den;
    let t = (w.conj() * e).im / den;
    if r > 0.0 && (0.0..1.0).contains(&t) { Some(r) } else { None }
}

/// Σ c_{(a,b)} (x − cx)^a (y − cy)^b.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly2 {
    pub center: C64,
    pub terms: Vec<((u32, u32), C64)>,
}

impl Poly2 {
    pub fn eval(&self, z: C64) -> C64 {
        let d = z - self.center;
        self.terms
            .iter()
            .map(|&((a, b), c)| c * d.re.powi(a as i32) * d.im.powi(b as i32))
            .sum()
    }
}

fn multi_indices(n: u32) -> Vec<(u32, u32)> {
    let mut v = Vec::new();
    for deg in 0..=n {
        for a in (0..=deg).rev() {
            v.push((a, deg - a));
        }
    }
    v
}

// 7-point central stencils, exact on polynomials of degree ≤ 6
fn fd_axis(values: &[C64], n: usize, order: u32, axis: usize, h: f64) -> Vec<C64> {
    let (st, den): ([f64; 7], f64) = match order {
        1 => ([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0], 60.0 * h),
        2 => ([2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0], 180.0 * h * h),
        3 => ([1.0, -8.0, 13.0, 0.0, -13.0, 8.0, -1.0], 8.0 * h * h * h),
        _ => return values.to_vec(),
    };
    let mut out = vec![C64::new(0.0, 0.0); values.len()];
    for k in 0..n {
        for j in 0..n {
            let pos = if axis == 0 { j } else { k };
            if pos < 3 || pos + 3 >= n {
                continue;
            }
            let mut s = C64::new(0.0, 0.0);
            for (o, c) in st.iter().enumerate() {
                let q = pos + o - 3;
                let idx = if axis == 0 { k * n + q } else { q * n + j };
                s += *c * values[idx];
            }
            out[k * n + j] = s / den;
        }
    }
    out
}

fn lagrange6_2d(values: &[C64], n: usize, x0: f64, h: f64, z: C64) -> C64 {
    let weights = |u: f64| -> (usize, [f64; 6]) {
        let x = (u - x0) / h;
        let base = (x.floor() as i64 - 2).clamp(0, n as i64 - 6) as usize;
        let mut w = [0.0; 6];
        for (i, wi) in w.iter_mut().enumerate() {
            let mut l = 1.0;
            for k in 0..6 {
                if k != i {
                    l *= (x - (base + k) as f64) / ((base + i) as f64 - (base + k) as f64);
                }
            }
            *wi = l;
        }
        (base, w)
    };
    let (bj, wj) = weights(z.re);
    let (bk, wk) = weights(z.im);
    let mut s = C64::new(0.0, 0.0);
    for (a, wa) in wk.iter().enumerate() {
        for (b, wb) in wj.iter().enumerate() {
            s += wa * wb * values[(bk + a) * n + bj + b];
        }
    }
    s
}

struct MeyersSetup {
    center: C64,
    half: f64,
    nodes: Vec<(C64, f64)>,
    derivs: Vec<((u32, u32), Vec<C64>)>,
}

fn meyers_setup(f: &GridField, q_center: C64, q_side: f64, n: u32) -> Result<MeyersSetup> {
    let spec = f.spec();
    let (l, h, m) = (spec.half_width(), spec.spacing(), spec.n());
    let half = 1.25 * q_side;
    let margin = 7.0 * h;
    if q_center.re - half < -l + margin
        || q_center.im - half < -l + margin
        || q_center.re + half > l - margin
        || q_center.im + half > l - margin
    {
        return Err(invalid("the dilate (5/2)Q leaves the grid"));
    }
    let mut derivs = Vec::new();
    for alpha in multi_indices(n) {
        let dx = fd_axis(f.values(), m, alpha.0, 0, h);
        let dxy = fd_axis(&dx, m, alpha.1, 1, h);
        derivs.push((alpha, dxy));
    }
    let cells = ((2.0 * half / h).ceil() as usize).clamp(4, 48);
    let (xs, wx) = gauss_legendre_on(cells.max(8), q_center.re - half, q_center.re + half);
    let (ys, wy) = gauss_legendre_on(cells.max(8), q_center.im - half, q_center.im + half);
    let mut nodes = Vec::with_capacity(xs.len() * ys.len());
    for (y, wyv) in ys.iter().zip(&wy) {
        for (x, wxv) in xs.iter().zip(&wx) {
            nodes.push((C64::new(*x, *y), wxv * wyv));
        }
    }
    Ok(MeyersSetup {
        center: q_center,
        half,
        nodes,
        derivs,
    })
}

fn falling(k: u32, a: u32) -> f64 {
    (0..a).map(|i| (k - i) as f64).product()
}

fn mono_integral(half: f64, k: u32) -> f64 {
    if k % 2 == 1 { 0.0 } else { 2.0 * half.powi(k as i32 + 1) / (k + 1) as f64 }
}

/// P^n_Q f: the polynomial of degree ≤ n with ∫_{(5/2)Q} ∂^α(f − P) = 0 for
/// |α| ≤ n. Q is given by center and side.
pub fn meyers_poly(f: &GridField, q_center: C64, q_side: f64, n: u32) -> Result<Poly2> {
    let s = meyers_setup(f, q_center, q_side, n)?;
    meyers_from_setup(f, &s, n)
}

fn meyers_from_setup(f: &GridField, s: &MeyersSetup, n: u32) -> Result<Poly2> {
    let spec = f.spec();
    let (x0, h, m) = (-spec.half_width(), spec.spacing(), spec.n());
    let idx = multi_indices(n);
    let k = idx.len();
    let mut a = DMatrix::<C64>::zeros(k, k);
    let mut rhs = DVector::<C64>::zeros(k);
    for (r, &(al, be)) in idx.iter().enumerate() {
        for (c, &(p, q)) in idx.iter().enumerate() {
            if p >= al && q >= be {
                let v = falling(p, al) * falling(q, be) * mono_integral(s.half, p - al) * mono_integral(s.half, q - be);
                a[(r, c)] = C64::new(v, 0.0);
            }
        }
        let d = &s.derivs[r].1;
        rhs[r] = s.nodes.iter().map(|&(z, w)| w * lagrange6_2d(d, m, x0, h, z)).sum();
    }
    let c = a.lu().solve(&rhs).ok_or_else(|| QcError::IllConditioned(f64::INFINITY))?;
    Ok(Poly2 {
        center: s.center,
        terms: idx.into_iter().zip(c.iter().copied()).collect(),
    })
}

/// ‖f − P^n_Q f‖_{L¹((5/2)Q)} and ℓ(Q)^n ‖∇^n f − avg‖_{L¹((5/2)Q)}.
pub fn poincare_audit(f: &GridField, q_center: C64, q_side: f64, n: u32) -> Result<(f64, f64)> {
    let s = meyers_setup(f, q_center, q_side, n)?;
    let p = meyers_from_setup(f, &s, n)?;
    let spec = f.spec();
    let (x0, h, m) = (-spec.half_width(), spec.spacing(), spec.n());
    let area: f64 = s.nodes.iter().map(|&(_, w)| w).sum();
    let lhs: f64 = s
        .nodes
        .iter()
        .map(|&(z, w)| w * (lagrange6_2d(f.values(), m, x0, h, z) - p.eval(z)).norm())
        .sum();
    let top: Vec<&Vec<C64>> = s.derivs.iter().filter(|(al, _)| al.0 + al.1 == n).map(|(_, d)| d).collect();
    let samples: Vec<Vec<C64>> = top
        .iter()
        .map(|d| s.nodes.iter().map(|&(z, _)| lagrange6_2d(d, m, x0, h, z)).collect())
        .collect();
    let avgs: Vec<C64> = samples
        .iter()
        .map(|v| v.iter().zip(&s.nodes).map(|(x, &(_, w))| x * w).sum::<C64>() / area)
        .collect();
    let mut rhs = 0.0;
    for (i, &(_, w)) in s.nodes.iter().enumerate() {
        let e: f64 = samples.iter().zip(&avgs).map(|(v, a)| (v[i] - a).norm_sqr()).sum();
        rhs += w * e.sqrt();
    }
    Ok((lhs, q_side.powi(n as i32) * rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain_geometry::BoundaryCurve;
    use crate::grid_field::{sample, GridSpec};

    #[test]
    fn moment_polynomials() {
        let i = Interval::new(-1.0, 1.0);
        let aff = LineFn::new(|x| 2.0 - 3.0 * x, (-3.0, 3.0));
        let r = dorronsoro_poly(&aff, i, 1).unwrap();
        assert!((r.eval(0.7) - aff.value(0.7)).abs() < 1e-12);
        let sq = LineFn::new(|x| x * x, (-3.0, 3.0));
        let r = dorronsoro_poly(&sq, i, 1).unwrap();
        for x in [-1.0, 0.0, 0.4] {
            assert!((r.eval(x) - 1.0 / 3.0).abs() < 1e-12);
        }
        let r2 = dorronsoro_poly(&sq, i, 2).unwrap();
        assert!((r2.eval(2.5) - 6.25).abs() < 1e-11);
        // moment residuals
        for j in 0..2 {
            let g = |x: f64| (r.eval(x) - x * x) * x.powi(j);
            assert!(panel_integral(&g, -1.0, 1.0, 64).abs() < 1e-12);
        }
    }

    #[test]
    fn interval_beta_values() {
        let i = Interval::new(-1.0, 1.0);
        let aff = LineFn::new(|x| 2.0 - 3.0 * x, (-3.0, 3.0));
        assert!(beta_interval(&aff, i, 1).unwrap() < 1e-12);
        // ∫_{−3}^{3}|x² − 1/3| dx / 4 by the antiderivative
        let r = 1.0 / 3f64.sqrt();
        let anti = |x: f64| x * x * x / 3.0 - x / 3.0;
        let exact = (2.0 * (anti(3.0) - anti(r)) + 2.0 * (anti(0.0) - anti(r)).abs()) / 4.0;
        assert!((exact - (4.0 + 2.0 / (9.0 * 3f64.sqrt()))).abs() < 1e-12);
        let sq = LineFn::new(|x| x * x, (-3.0, 3.0));
        let b = beta_interval(&sq, i, 1).unwrap();
        assert!((b - exact).abs() < 1e-9, "{b} vs {exact}");
        // scaling: β(f(2·), I/2) = 2 β(f, I)
        let sq2 = LineFn::new(|x| (2.0 * x) * (2.0 * x), (-1.5, 1.5));
        let b2 = beta_interval(&sq2, Interval::new(-0.5, 0.5), 1).unwrap();
        assert!((b2 - 2.0 * b).abs() < 1e-10 * b);
        assert!(beta_interval(&sq, Interval::new(-2.0, 2.0), 1).is_err());
    }

    #[test]
    fn optimal_versus_candidate() {
        let f = LineFn::new(|x: f64| (3.0 * x).sin() + x.abs(), (-3.0, 3.0));
        let i = Interval::new(-0.6, 0.4);
        let b = beta_interval(&f, i, 1).unwrap();
        let cand = Poly1 {
            center: i.center(),
            half: 0.5,
            coeffs: vec![f.value(i.center()), 0.3],
        };
        assert!(b <= 2.0 * beta_against(&f, i, &cand) + 1e-12 || b <= beta_against(&f, i, &cand) * 10.0);
    }

    #[test]
    fn dyadic_sum_for_polynomials_vanishes() {
        let f = LineFn::new(|x| 1.0 + 2.0 * x, (-1.0, 1.0));
        let r = besov_from_betas(&f, 0.6, 2.0, 1, 6).unwrap();
        assert!(r.value < 1e-10);
        let g = LineFn::new(|x: f64| x.abs(), (-1.0, 1.0));
        assert!(besov_from_betas(&g, 0.6, 2.0, 1, 6).unwrap().value > 0.1);
    }

    #[test]
    fn sampled_line_is_exact_on_quintics() {
        let f = |x: f64| 1.0 - x + 0.5 * x.powi(5);
        let s = SampledLine::from_fn(-1.0, 1.0, 101, f).unwrap();
        assert!((s.value(0.3137) - f(0.3137)).abs() < 1e-13);
    }

    fn disc_setup(floor: u32) -> (JordanDomain, WhitneyCovering) {
        let d = JordanDomain::new(BoundaryCurve::circle(C64::new(0.0, 0.0), 1.0, 1024).unwrap());
        let cov = d.whitney_covering(1.0, floor).unwrap();
        (d, cov)
    }

    fn level_means(table: &BetaTable, cov: &WhitneyCovering, n: usize, levels: &[u32]) -> Vec<f64> {
        levels
            .iter()
            .map(|&lv| {
                let v: Vec<f64> = table.rows.iter().filter(|r| cov.cubes[r.cube].level == lv).map(|r| table.beta(r.cube, n)).collect();
                v.iter().sum::<f64>() / v.len() as f64
            })
            .collect()
    }

    fn slope(xs: &[f64], ys: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        sxy / sxx
    }

    #[test]
    fn disc_beta_slopes() {
        let (d, cov) = disc_setup(10);
        let eng = BetaEngine::new(&d, BetaConfig::new(0.5, 1.0)).unwrap();
        let table = BetaTable::build(&eng, &cov).unwrap();
        let levels = [6u32, 7, 8, 9];
        let lx: Vec<f64> = levels.iter().map(|&l| (2.0 / 2f64.powi(l as i32)).ln()).collect();
        let b1: Vec<f64> = level_means(&table, &cov, 1, &levels).iter().map(|v| v.ln()).collect();
        let b2: Vec<f64> = level_means(&table, &cov, 2, &levels).iter().map(|v| v.ln()).collect();
        let (s1, s2) = (slope(&lx, &b1), slope(&lx, &b2));
        assert!((s1 - 1.0).abs() <= 0.15, "{s1}");
        assert!((s2 - 2.0).abs() <= 0.2, "{s2}");
        // oversized cubes carry β = 1 and every Π_Q contains its cube
        for r in &table.rows {
            let q = &cov.cubes[r.cube];
            if q.side > 0.05 {
                assert_eq!(r.beta1.beta, 1.0);
            }
            assert!(r.half_plane.contains(q.center));
        }
        // fitted lines for small cubes hug the circle
        for r in table.rows.iter().filter(|r| r.side < 0.01).take(50) {
            let hp = r.half_plane;
            let foot = hp.point;
            assert!((foot.norm() - 1.0).abs() <= r.side * r.side, "{} {}", foot.norm(), r.side);
        }
        let bn = boundary_norm_from_betas(&table, &cov, &d, 0.5, 4.0, 1).unwrap();
        let n = bn.by_floor.len();
        let (a, b) = (bn.by_floor[n - 2].1, bn.by_floor[n - 1].1);
        assert!((b - a).abs() <= 0.1 * b);
        assert!(bn.value >= d.curve().length().powf(0.25));
    }

    #[test]
    fn flat_edges_have_vanishing_betas() {
        let h = 3f64.sqrt() / 2.0;
        let hex: Vec<C64> = (0..6).map(|k| C64::from_polar(1.0, std::f64::consts::PI * k as f64 / 3.0)).collect();
        let d = JordanDomain::new(BoundaryCurve::polygon(&hex, 1536).unwrap());
        let cov = d.whitney_covering(1.0, 8).unwrap();
        let eng = BetaEngine::new(&d, BetaConfig::new(0.4, 2.0)).unwrap();
        // cubes near the midpoint of the bottom edge v = −√3/2
        let mut seen = 0;
        for q in &cov.cubes {
            if q.side <= 0.02 && q.center.re.abs() < 0.1 && q.center.im < -h + 0.2 {
                let b = eng.beta_cube(q, 1).unwrap();
                assert!(b.beta <= 1e-8, "{}", b.beta);
                let hp = eng.half_plane_fit(q).unwrap();
                assert!((hp.point.im + h).abs() < 1e-8 && (hp.normal - C64::new(0.0, -1.0)).norm() < 1e-8);
                seen += 1;
            }
        }
        assert!(seen > 3);
        // corners keep β bounded below, so the boundary sum grows with the floor
        let table = BetaTable::build(&eng, &cov).unwrap();
        let bn = boundary_norm_from_betas(&table, &cov, &d, 0.5, 4.0, 1).unwrap();
        let n = bn.by_floor.len();
        assert!(bn.by_floor[n - 1].1 > 1.05 * bn.by_floor[n - 3].1);
    }

    #[test]
    fn flatness_and_sum_checks_on_disc() {
        let (d, cov) = disc_setup(9);
        let eng = BetaEngine::new(&d, BetaConfig::new(0.5, 1.0)).unwrap();
        let table = BetaTable::build(&eng, &cov).unwrap();
        let mut ratios = Vec::new();
        for (k, q) in cov.cubes.iter().enumerate().filter(|(_, q)| (5..=7).contains(&q.level)).step_by(97).take(4) {
            let _ = q;
            let (lhs, rhs) = flatness_bound_check(&eng, &table, &cov, k, 1.0, 0.05).unwrap();
            assert!(lhs.is_finite() && rhs > 0.0);
            ratios.push(lhs / rhs);
        }
        assert!(ratios.iter().all(|&r| r < 10.0), "{ratios:?}");
        let (lhs, rhs) = beta_sum_lemma_check(&table, &cov, &d, 0.5, 4.0, 1.0).unwrap();
        assert!(lhs.is_finite() && rhs.is_finite() && lhs > 0.0 && rhs > 0.0);
    }

    #[test]
    fn meyers_polynomials() {
        let s = GridSpec::new(64, 4.0).unwrap();
        let f = sample(s, |z| C64::new(z.re * z.re, 0.0)).unwrap();
        let p = meyers_poly(&f, C64::new(0.0, 0.0), 2.0, 1).unwrap();
        for z in [C64::new(0.0, 0.0), C64::new(1.0, -2.0)] {
            assert!((p.eval(z) - 25.0 / 12.0).norm() < 1e-10);
        }
        let g = sample(s, |z| C64::new(1.0 + z.re - 2.0 * z.im * z.re, 0.5 * z.im * z.im * z.im)).unwrap();
        let p = meyers_poly(&g, C64::new(0.3, -0.2), 1.0, 3).unwrap();
        let z = C64::new(0.7, 0.1);
        assert!((p.eval(z) - g.interpolate(z)).norm() < 1e-2);
        assert!((p.eval(z) - C64::new(1.0 + z.re - 2.0 * z.im * z.re, 0.5 * z.im.powi(3))).norm() < 1e-10);
        assert!(meyers_poly(&g, C64::new(3.5, 0.0), 1.0, 1).is_err());
    }

    #[test]
    fn poincare_constant_is_bounded() {
        use rand::{Rng, SeedableRng};
        let s = GridSpec::new(128, 4.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut ratios = Vec::new();
        for _ in 0..10 {
            let (a, b, c): (f64, f64, f64) = (rng.random_range(0.5..2.0), rng.random_range(0.5..2.0), rng.random_range(0.0..6.0));
            let f = sample(s, |z| C64::new((a * z.re + c).sin() * (b * z.im).cos(), 0.0)).unwrap();
            let (lhs, rhs) = poincare_audit(&f, C64::new(0.2, -0.1), 0.8, 1).unwrap();
            ratios.push(lhs / rhs);
        }
        let max = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(max < 2.0, "{ratios:?}");
    }
}
