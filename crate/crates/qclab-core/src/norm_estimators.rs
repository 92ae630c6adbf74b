//! Discrete Hölder, Besov, Triebel–Lizorkin, trace and weighted-derivative
//! norms, and operator probes.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::domain_geometry::BoundaryCurve;
use crate::error::{invalid, Result};
use crate::grid_field::{lp_norm, same_grid, wirtinger_derivative_with, DerivativeMode, GridField, GridSpec, RegionMask};
use crate::linalg::{randomized_singular_values, LinearOperator};
use crate::quadrature::simpson_weights;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    Holder,
    BesovInterval,
    TlLocal,
    TlShadow,
    Trace,
    WeightedDeriv,
    OpNorm,
}

impl NormKind {
    pub fn name(self) -> &'static str {
        match self {
            NormKind::Holder => "holder",
            NormKind::BesovInterval => "besov_interval",
            NormKind::TlLocal => "tl_local",
            NormKind::TlShadow => "tl_shadow",
            NormKind::Trace => "trace",
            NormKind::WeightedDeriv => "weighted_deriv",
            NormKind::OpNorm => "op_norm",
        }
    }
}

/// A norm value with the parameters and discretization it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub kind: NormKind,
    pub s: f64,
    pub p: f64,
    pub q: f64,
    pub rho: f64,
    /// Grid size n or node count M.
    pub resolution: usize,
    /// Smallest scale resolved (h, or the excluded band width).
    pub floor: f64,
    /// Worst-case bound for the excluded diagonal band (0 if none).
    pub band_bound: f64,
    /// Fraction of the region left out of the outer integral.
    pub excluded_fraction: f64,
    pub mask_id: String,
}

impl NormEstimate {
    fn new(kind: NormKind, value: f64) -> Self {
        Self {
            value,
            kind,
            s: f64::NAN,
            p: f64::NAN,
            q: f64::NAN,
            rho: f64::NAN,
            resolution: 0,
            floor: 0.0,
            band_bound: 0.0,
            excluded_fraction: 0.0,
            mask_id: String::new(),
        }
    }
}

/// CSV "kind,s,p,q,n,floor,value".
pub fn write_norm_log<W: Write>(w: W, rows: &[NormEstimate]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["kind", "s", "p", "q", "n", "floor", "value"])?;
    for r in rows {
        wr.write_record(&[
            r.kind.name().to_string(),
            r.s.to_string(),
            r.p.to_string(),
            r.q.to_string(),
            r.resolution.to_string(),
            r.floor.to_string(),
            r.value.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

const PAIR_BUDGET: usize = 1_000_000;

fn holder_ratio(fx: C64, fy: C64, fm: Option<C64>, dist: f64, s: f64) -> f64 {
    match fm {
        Some(m) => (fx - 2.0 * m + fy).norm() / dist,
        None => (fx - fy).norm() / dist.powf(s),
    }
}

/// Hölder seminorm of uniform samples on a line with spacing `h`.
/// s = 1 uses second differences. Pairs are exhaustive within the budget,
/// otherwise drawn per dyadic band of offsets.
pub fn holder_seminorm_line(values: &[f64], h: f64, s: f64, seed: u64) -> Result<f64> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(invalid("Hölder exponent must lie in (0, 1]"));
    }
    let n = values.len();
    let second = s == 1.0;
    let eval = |i: usize, off: usize| -> Option<f64> {
        let j = i + off;
        if j >= n || off == 0 || (second && off % 2 == 1) {
            return None;
        }
        let fm = second.then(|| C64::new(values[i + off / 2], 0.0));
        Some(holder_ratio(C64::new(values[i], 0.0), C64::new(values[j], 0.0), fm, off as f64 * h, s))
    };
    let mut best: f64 = 0.0;
    if n * n / 2 <= PAIR_BUDGET {
        for i in 0..n {
            for off in 1..n - i {
                if let Some(r) = eval(i, off) {
                    best = best.max(r);
                }
            }
        }
        return Ok(best);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bands = (n as f64).log2().ceil() as usize;
    let per = PAIR_BUDGET / bands.max(1);
    for b in 0..bands {
        let (lo, hi) = (1usize << b, (1usize << (b + 1)).min(n));
        if lo >= n {
            break;
        }
        for _ in 0..per {
            let off = rng.random_range(lo..hi);
            if off >= n {
                continue;
            }
            let i = rng.random_range(0..n - off);
            if let Some(r) = eval(i, off) {
                best = best.max(r);
            }
        }
    }
    Ok(best)
}

/// Hölder seminorm of a field over a region, sampling lattice offsets per
/// dyadic band.
pub fn holder_seminorm(f: &GridField, s: f64, region: &RegionMask, seed: u64) -> Result<f64> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(invalid("Hölder exponent must lie in (0, 1]"));
    }
    same_grid(f.spec(), region.spec())?;
    let spec = f.spec();
    let (n, h) = (spec.n() as i64, spec.spacing());
    let idx = region.indices();
    if idx.len() < 2 {
        return Ok(0.0);
    }
    let second = s == 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bands = (n as f64).log2().ceil() as u32 + 1;
    let per = PAIR_BUDGET / bands as usize;
    let mut best: f64 = 0.0;
    for b in 0..bands {
        let (lo, hi) = (2f64.powi(b as i32), 2f64.powi(b as i32 + 1));
        for _ in 0..per {
            let i = idx[rng.random_range(0..idx.len())];
            let (j, k) = spec.coords(i);
            let r = rng.random_range(lo..hi);
            let t = rng.random_range(0.0..std::f64::consts::TAU);
            let (mut dj, mut dk) = ((r * t.cos()).round() as i64, (r * t.sin()).round() as i64);
            if second {
                dj += dj.rem_euclid(2);
                dk += dk.rem_euclid(2);
            }
            if dj == 0 && dk == 0 {
                continue;
            }
            let (j2, k2) = (j as i64 + dj, k as i64 + dk);
            if !(0..n).contains(&j2) || !(0..n).contains(&k2) || !region.contains(j2 as usize, k2 as usize) {
                continue;
            }
            let fm = if second {
                let (jm, km) = ((j as i64 + dj / 2) as usize, (k as i64 + dk / 2) as usize);
                if !region.contains(jm, km) {
                    continue;
                }
                Some(f.value(jm, km))
            } else {
                None
            };
            let dist = ((dj * dj + dk * dk) as f64).sqrt() * h;
            best = best.max(holder_ratio(f.value(j, k), f.value(j2 as usize, k2 as usize), fm, dist, s));
        }
    }
    Ok(best)
}

fn finite_derivative(values: &[f64], h: f64, k: usize) -> Vec<f64> {
    let mut v = values.to_vec();
    for _ in 0..k {
        let n = v.len();
        let mut d = vec![0.0; n];
        for i in 0..n {
            d[i] = if i == 0 {
                (v[1] - v[0]) / h
            } else if i == n - 1 {
                (v[n - 1] - v[n - 2]) / h
            } else {
                (v[i + 1] - v[i - 1]) / (2.0 * h)
            };
        }
        v = d;
    }
    v
}

/// (∫_I∫_I |f^{(k)}(x) − f^{(k)}(y)|^p / |x−y|^{(σ−k)p+1})^{1/p}, k = ⌊σ⌋, from
/// uniform samples (odd count) by tensor Simpson with the diagonal excluded.
pub fn besov_interval_seminorm(values: &[f64], a: f64, b: f64, sigma: f64, p: f64) -> Result<NormEstimate> {
    let n = values.len();
    if n < 3 || n % 2 == 0 {
        return Err(invalid("need an odd number (≥ 3) of samples"));
    }
    if !(sigma > 0.0) || sigma.fract() == 0.0 {
        return Err(invalid("σ must be positive and non-integer"));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(invalid("need 1 ≤ p < ∞"));
    }
    let h = (b - a) / (n - 1) as f64;
    let k = sigma.floor() as usize;
    let frac = sigma - k as f64;
    let d = finite_derivative(values, h, k);
    let w = simpson_weights(n, h);
    let expo = frac * p + 1.0;
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let dist = (i as f64 - j as f64).abs() * h;
                total += w[i] * w[j] * (d[i] - d[j]).abs().powf(p) / dist.powf(expo);
            }
        }
    }
    let lip = d.windows(2).map(|x| (x[1] - x[0]).abs() / h).fold(0.0, f64::max);
    let band = 2.0 * (b - a) * lip.powf(p) * h.powf(p * (1.0 - frac)) / (p * (1.0 - frac));
    let mut e = NormEstimate::new(NormKind::BesovInterval, total.powf(1.0 / p));
    e.s = sigma;
    e.p = p;
    e.q = p;
    e.resolution = n;
    e.floor = h;
    e.band_bound = band.powf(1.0 / p);
    Ok(e)
}

fn periodic_derivative(values: &[C64], k: usize) -> Vec<C64> {
    if k == 0 {
        return values.to_vec();
    }
    let m = values.len();
    let mut c = values.to_vec();
    crate::fft::fft1(&mut c, false);
    for (i, ci) in c.iter_mut().enumerate() {
        let f = crate::fft::signed_index(i, m) as f64;
        if 2 * i == m {
            *ci = C64::new(0.0, 0.0);
        } else {
            *ci *= C64::new(0.0, f).powu(k as u32);
        }
    }
    crate::fft::fft1(&mut c, true);
    c
}

/// Periodic version of the interval seminorm on T with the geodesic distance;
/// samples are uniform in t ∈ [0, 2π).
pub fn periodic_besov_seminorm(values: &[C64], sigma: f64, p: f64) -> Result<f64> {
    let m = values.len();
    if m < 4 {
        return Err(invalid("need at least 4 samples"));
    }
    if !(sigma > 0.0) || sigma.fract() == 0.0 {
        return Err(invalid("σ must be positive and non-integer"));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(invalid("need 1 ≤ p < ∞"));
    }
    let k = sigma.floor() as usize;
    let frac = sigma - k as f64;
    let d = periodic_derivative(values, k);
    let h = std::f64::consts::TAU / m as f64;
    let expo = frac * p + 1.0;
    // the sum depends on i − j only through the distance, so group by offset
    let mut total = 0.0;
    for off in 1..m {
        let dist = off.min(m - off) as f64 * h;
        let mut acc = 0.0;
        for i in 0..m {
            acc += (d[i] - d[(i + off) % m]).norm().powf(p);
        }
        total += acc / dist.powf(expo);
    }
    Ok((total * h * h).powf(1.0 / p))
}

/// L^p(T) norm plus the periodic seminorm.
pub fn periodic_besov_norm(values: &[C64], sigma: f64, p: f64) -> Result<f64> {
    let h = std::f64::consts::TAU / values.len() as f64;
    let lp = (values.iter().map(|v| v.norm().powf(p)).sum::<f64>() * h).powf(1.0 / p);
    Ok(lp + periodic_besov_seminorm(values, sigma, p)?)
}

/// Seminorm of g∘γ on T for g sampled at the curve nodes.
pub fn trace_norm(g: &[C64], curve: &BoundaryCurve, sigma: f64, p: f64) -> Result<NormEstimate> {
    if g.len() != curve.len() {
        return Err(invalid("one value per curve node is required"));
    }
    let v = periodic_besov_seminorm(g, sigma, p)?;
    let mut e = NormEstimate::new(NormKind::Trace, v);
    e.s = sigma;
    e.p = p;
    e.q = p;
    e.resolution = curve.len();
    e.floor = curve.node_spacing();
    Ok(e)
}

/// trace_norm of a function evaluated at the curve nodes.
pub fn trace_norm_of(g: impl Fn(C64) -> C64, curve: &BoundaryCurve, sigma: f64, p: f64) -> Result<NormEstimate> {
    let v: Vec<C64> = curve.points().iter().map(|&z| g(z)).collect();
    trace_norm(&v, curve, sigma, p)
}

/// Parameters of the intrinsic Triebel–Lizorkin seminorm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TlParams {
    pub s: f64,
    pub p: f64,
    pub q: f64,
    pub rho: f64,
}

impl TlParams {
    pub fn new(s: f64, p: f64, q: f64, rho: f64) -> Self {
        Self { s, p, q, rho }
    }
}

fn tl_derivatives(f: &GridField, s: f64) -> Result<(Vec<GridField>, f64)> {
    if !(s > 0.0) || s.fract() == 0.0 {
        return Err(invalid("s must be positive and non-integer"));
    }
    let k = s.floor() as u32;
    let sigma = s - k as f64;
    let fields = (0..=k)
        .map(|a| wirtinger_derivative_with(f, (a, k - a), DerivativeMode::CentralDifference))
        .collect();
    Ok((fields, sigma))
}

/// Distances to ∂Ω for the whole grid (from the mask if none supplied).
fn distances(omega: &RegionMask, delta: Option<&[f64]>) -> Vec<f64> {
    match delta {
        Some(d) => d.to_vec(),
        None => omega.distance_to_complement(),
    }
}

// inner sum at grid point i over the disc of radius `radius`; `shadow`
// restricts to Ω, otherwise the disc is taken inside Ω anyway
fn inner_sum(g: &GridField, omega: &RegionMask, i: usize, radius: f64, sigma: f64, q: f64) -> f64 {
    let w = KernelTable::new(g.spec().spacing(), radius, sigma, q);
    w.sum(g, omega, i, radius)
}

/// h²/|x−y|^{σq+2} indexed by the squared lattice offset.
struct KernelTable {
    weights: Vec<f64>,
    q: f64,
}

impl KernelTable {
    fn new(h: f64, radius: f64, sigma: f64, q: f64) -> Self {
        let r = (radius / h).floor() as usize;
        let expo = sigma * q + 2.0;
        let weights = (0..=2 * r * r)
            .map(|d2| if d2 == 0 { 0.0 } else { h * h / ((d2 as f64).sqrt() * h).powf(expo) })
            .collect();
        Self { weights, q }
    }

    fn sum(&self, g: &GridField, omega: &RegionMask, i: usize, radius: f64) -> f64 {
        let spec = g.spec();
        let (n, h) = (spec.n() as i64, spec.spacing());
        let (j, k) = spec.coords(i);
        let r = (radius / h).floor() as i64;
        let lim = radius * radius / (h * h);
        let gx = g.values()[i];
        let vals = g.values();
        let bits = omega.bits();
        let mut acc = 0.0;
        for dk in -r..=r {
            let k2 = k as i64 + dk;
            if !(0..n).contains(&k2) {
                continue;
            }
            let span = ((lim - (dk * dk) as f64).max(0.0).sqrt().floor() as i64).min(r);
            let lo = (j as i64 - span).max(0);
            let hi = (j as i64 + span).min(n - 1);
            for j2 in lo..=hi {
                let dj = j2 - j as i64;
                let d2 = (dj * dj + dk * dk) as usize;
                if d2 == 0 {
                    continue;
                }
                let idx = spec.index(j2 as usize, k2 as usize);
                if !bits[idx] {
                    continue;
                }
                let diff = gx - vals[idx];
                let v = if self.q == 2.0 { diff.norm_sqr() } else { diff.norm().powf(self.q) };
                acc += v * self.weights[d2];
            }
        }
        acc
    }
}

fn band_bound_at(g: &GridField, i: usize, sigma: f64, q: f64) -> f64 {
    let spec = g.spec();
    let n = spec.n();
    let (j, k) = spec.coords(i);
    let h = spec.spacing();
    let gx = g.values()[i];
    let mut lip: f64 = 0.0;
    for (dj, dk) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
        let (j2, k2) = (j as i64 + dj, k as i64 + dk);
        if (0..n as i64).contains(&j2) && (0..n as i64).contains(&k2) {
            lip = lip.max((gx - g.value(j2 as usize, k2 as usize)).norm() / h);
        }
    }
    // ∫_{|y−x|<h} L^q |x−y|^{q−σq−2} dy
    std::f64::consts::TAU * lip.powf(q) * h.powf(q * (1.0 - sigma)) / (q * (1.0 - sigma))
}

/// D^s_q f(x) for one derivative field g at grid index i.
pub fn local_sharp(g: &GridField, omega: &RegionMask, i: usize, sigma: f64, q: f64, radius: f64) -> f64 {
    inner_sum(g, omega, i, radius, sigma, q).powf(1.0 / q)
}

fn tl_core(
    f: &GridField,
    omega: &RegionMask,
    params: TlParams,
    delta: Option<&[f64]>,
    shadow: bool,
) -> Result<(NormEstimate, Vec<f64>)> {
    same_grid(f.spec(), omega.spec())?;
    let TlParams { s, p, q, rho } = params;
    if !(p >= 1.0 && q >= 1.0 && p.is_finite() && q.is_finite()) {
        return Err(invalid("need finite p, q ≥ 1"));
    }
    let (fields, sigma) = tl_derivatives(f, s)?;
    let spec = *f.spec();
    let h = spec.spacing();
    let dist = distances(omega, delta);
    let idx = omega.indices();
    let mut total = 0.0;
    let mut band = 0.0;
    let mut excluded = 0usize;
    let mut sharp = vec![0.0; spec.len()];
    let rmax = idx.iter().map(|&i| rho * dist[i]).filter(|r| r.is_finite()).fold(2.0 * spec.half_width(), f64::max);
    let table = KernelTable::new(h, rmax, sigma, q);
    for &i in &idx {
        let radius = rho * dist[i];
        if !shadow && radius < 3.0 * h {
            excluded += 1;
            continue;
        }
        let radius = if radius.is_finite() { radius } else { 2.0 * spec.half_width() };
        let mut dv = 0.0;
        for g in &fields {
            let v = table.sum(g, omega, i, radius);
            dv += v.powf(1.0 / q).powf(p);
            band += band_bound_at(g, i, sigma, q).powf(p / q);
        }
        sharp[i] = dv.powf(1.0 / p);
        total += dv;
    }
    let area = spec.cell_area();
    let kind = if shadow { NormKind::TlShadow } else { NormKind::TlLocal };
    let mut e = NormEstimate::new(kind, (total * area).powf(1.0 / p));
    e.s = s;
    e.p = p;
    e.q = q;
    e.rho = rho;
    e.resolution = spec.n();
    e.floor = h;
    e.band_bound = (band * area).powf(1.0 / p);
    e.excluded_fraction = if idx.is_empty() { 0.0 } else { excluded as f64 / idx.len() as f64 };
    e.mask_id = f.label().to_string();
    Ok((e, sharp))
}

/// Σ_{|α|=k} (∫_Ω (∫_{B(x,ρδ(x))} |D^α f(x) − D^α f(y)|^q / |x−y|^{σq+2} dy)^{p/q} dx)^{1/p}
/// with s = k + σ, ρ < 1, over points with ρδ(x) ≥ 3h. `delta` overrides the
/// lattice distance to the complement of Ω.
pub fn tl_seminorm_local(f: &GridField, omega: &RegionMask, params: TlParams, delta: Option<&[f64]>) -> Result<NormEstimate> {
    if params.q > params.p {
        return Err(invalid("q > p: use tl_seminorm_shadow"));
    }
    if !(params.rho > 0.0 && params.rho < 1.0) {
        return Err(invalid("local version needs 0 < ρ < 1"));
    }
    Ok(tl_core(f, omega, params, delta, false)?.0)
}

/// The local sharp function D^s_q f as a field (0 at excluded points).
pub fn local_sharp_field(f: &GridField, omega: &RegionMask, params: TlParams, delta: Option<&[f64]>) -> Result<GridField> {
    let (_, sharp) = tl_core(f, omega, params, delta, false)?;
    GridField::from_values(*f.spec(), sharp.into_iter().map(|v| C64::new(v, 0.0)).collect())
}

/// The same seminorm with the inner integral over the shadow B(x, ρδ(x)) ∩ Ω, ρ > 2.
pub fn tl_seminorm_shadow(f: &GridField, omega: &RegionMask, params: TlParams, delta: Option<&[f64]>) -> Result<NormEstimate> {
    if !(params.rho > 2.0) {
        return Err(invalid("shadow version needs ρ > 2"));
    }
    Ok(tl_core(f, omega, params, delta, true)?.0)
}

/// ‖(1 − |z|)^{1−σ} F'‖_{L^p(D)}.
pub fn weighted_derivative_norm(fprime: &GridField, sigma: f64, p: f64) -> Result<NormEstimate> {
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(invalid("σ must lie in (0, 1]"));
    }
    let spec = *fprime.spec();
    let disc = RegionMask::from_fn(spec, |z| z.norm() < 1.0);
    let w = fprime.map_with_point(|z, v| v * (1.0 - z.norm()).max(0.0).powf(1.0 - sigma));
    let mut e = NormEstimate::new(NormKind::WeightedDeriv, lp_norm(&w, p, &disc)?);
    e.s = sigma;
    e.p = p;
    e.resolution = spec.n();
    e.floor = spec.spacing();
    Ok(e)
}

/// Random band-limited fields restricted to Ω.
pub fn random_probe(spec: GridSpec, omega: &RegionMask, modes: i64, mean_zero: bool, rng: &mut impl Rng) -> GridField {
    let l = spec.half_width();
    let mut coeffs = Vec::new();
    for a in -modes..=modes {
        for b in -modes..=modes {
            let c = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            coeffs.push((a, b, c));
        }
    }
    let values: Vec<C64> = (0..spec.len())
        .map(|i| {
            if !omega.bits()[i] {
                return C64::new(0.0, 0.0);
            }
            let z = spec.point_at(i);
            coeffs
                .iter()
                .map(|&(a, b, c)| c * C64::from_polar(1.0, std::f64::consts::PI * (a as f64 * z.re + b as f64 * z.im) / (2.0 * l)))
                .sum()
        })
        .collect();
    let g = GridField::from_values(spec, values).expect("sized");
    if mean_zero {
        let m = g.mean();
        g.map(|v| v - m)
    } else {
        g
    }
}

/// max over probes of norm(op g)/norm(g): a lower bound for the operator norm.
pub fn operator_norm_probe(
    op: &dyn Fn(&GridField) -> GridField,
    norm: &dyn Fn(&GridField) -> f64,
    spec: GridSpec,
    omega: &RegionMask,
    trials: usize,
    mean_zero: bool,
    seed: u64,
) -> Result<NormEstimate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    let mut used = 0;
    for _ in 0..trials {
        let g = random_probe(spec, omega, 4, mean_zero, &mut rng);
        let ng = norm(&g);
        if ng == 0.0 {
            continue;
        }
        used += 1;
        best = best.max(norm(&op(&g)) / ng);
    }
    if used == 0 {
        return Err(invalid("every probe had zero norm"));
    }
    let mut e = NormEstimate::new(NormKind::OpNorm, best);
    e.resolution = spec.n();
    e.floor = spec.spacing();
    Ok(e)
}

type FieldMap<'a> = Box<dyn Fn(&GridField) -> GridField + 'a>;

/// An operator on L²(Ω) acting on the masked values, coordinates scaled by h
/// so that the Euclidean norm is the L² norm.
pub struct MaskedOperator<'a> {
    mask: RegionMask,
    idx: Vec<usize>,
    forward: FieldMap<'a>,
    adjoint: FieldMap<'a>,
}

impl<'a> MaskedOperator<'a> {
    pub fn new(mask: RegionMask, forward: FieldMap<'a>, adjoint: FieldMap<'a>) -> Self {
        let idx = mask.indices();
        Self {
            mask,
            idx,
            forward,
            adjoint,
        }
    }

    fn to_field(&self, x: &[C64]) -> GridField {
        let spec = *self.mask.spec();
        let inv = 1.0 / spec.spacing();
        let mut v = vec![C64::new(0.0, 0.0); spec.len()];
        for (&i, &xi) in self.idx.iter().zip(x) {
            v[i] = xi * inv;
        }
        GridField::from_values(spec, v).expect("sized")
    }

    fn from_field(&self, f: &GridField) -> Vec<C64> {
        let h = self.mask.spec().spacing();
        self.idx.iter().map(|&i| f.values()[i] * h).collect()
    }
}

impl LinearOperator for MaskedOperator<'_> {
    fn input_dim(&self) -> usize {
        self.idx.len()
    }
    fn output_dim(&self) -> usize {
        self.idx.len()
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.from_field(&(self.forward)(&self.to_field(x)))
    }
    fn apply_adjoint(&self, y: &[C64]) -> Vec<C64> {
        self.from_field(&(self.adjoint)(&self.to_field(y)))
    }
}

/// Leading singular values σ₁ ≥ … ≥ σ_r (r ≤ 64) by randomized range finding.
pub fn singular_value_profile(op: &dyn LinearOperator, rank: usize, seed: u64) -> Result<Vec<f64>> {
    if rank == 0 || rank > 64 {
        return Err(invalid("rank must lie in 1..=64"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(randomized_singular_values(op, rank, 10, 2, &mut rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_field::sample;
    use crate::singular_transforms::{beurling, beurling_adjoint};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn holder_examples() {
        let n = 801;
        let h = 2.0 / (n - 1) as f64;
        let xs: Vec<f64> = (0..n).map(|i| -1.0 + i as f64 * h).collect();
        let root: Vec<f64> = xs.iter().map(|x| x.abs().sqrt()).collect();
        let v = holder_seminorm_line(&root, h, 0.5, 1).unwrap();
        assert!(v <= 1.0 + 1e-12 && v >= 0.95, "{v}");
        let aff: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        assert!(holder_seminorm_line(&aff, h, 1.0, 1).unwrap() < 1e-10);
        assert_eq!(holder_seminorm_line(&vec![2.0; n], h, 0.3, 1).unwrap(), 0.0);
        assert!(holder_seminorm_line(&aff, h, 1.5, 1).is_err());
        // large inputs go through the banded sampler
        let n = 4001;
        let h = 2.0 / (n - 1) as f64;
        let root: Vec<f64> = (0..n).map(|i| (-1.0 + i as f64 * h).abs().sqrt()).collect();
        let v = holder_seminorm_line(&root, h, 0.5, 3).unwrap();
        assert!(v <= 1.0 + 1e-12 && v >= 0.95, "{v}");
    }

    #[test]
    fn planar_holder() {
        let s = GridSpec::new(64, 2.0).unwrap();
        let disc = RegionMask::disc(s, c(0.0), 1.5);
        let f = sample(s, |z| c(z.norm().sqrt())).unwrap();
        let v = holder_seminorm(&f, 0.5, &disc, 5).unwrap();
        assert!(v > 0.9 && v <= 1.0 + 1e-9, "{v}");
        let g = sample(s, |z| c(2.0 * z.re - z.im)).unwrap();
        assert!(holder_seminorm(&g, 1.0, &disc, 5).unwrap() < 1e-10);
    }

    #[test]
    fn besov_interval_examples() {
        let n = 2001;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let e = besov_interval_seminorm(&xs, 0.0, 1.0, 0.5, 2.0).unwrap();
        assert!((e.value - 1.0).abs() < 1e-3, "{}", e.value);
        let shifted: Vec<f64> = xs.iter().map(|x| x + 5.0).collect();
        assert_eq!(besov_interval_seminorm(&shifted, 5.0, 6.0, 0.5, 2.0).unwrap().value, e.value);
        assert_eq!(besov_interval_seminorm(&vec![1.0; 101], 0.0, 1.0, 0.5, 2.0).unwrap().value, 0.0);
        // homogeneity
        let tri: Vec<f64> = xs.iter().map(|x| (x - 0.3f64).abs()).collect();
        let a = besov_interval_seminorm(&tri, 0.0, 1.0, 0.7, 3.0).unwrap().value;
        let tri3: Vec<f64> = tri.iter().map(|v| -3.0 * v).collect();
        let b = besov_interval_seminorm(&tri3, 0.0, 1.0, 0.7, 3.0).unwrap().value;
        assert!((b - 3.0 * a).abs() < 1e-12 * b);
    }

    #[test]
    fn trace_of_real_part_on_circle() {
        let m = 256;
        let curve = BoundaryCurve::circle(c(0.0), 1.0, m).unwrap();
        let e = trace_norm_of(|z| c(z.re), &curve, 0.5, 2.0).unwrap();
        let cos: Vec<C64> = (0..m).map(|j| c((std::f64::consts::TAU * j as f64 / m as f64).cos())).collect();
        let direct = periodic_besov_seminorm(&cos, 0.5, 2.0).unwrap();
        assert!((e.value - direct).abs() < 1e-6);
        assert!(trace_norm_of(|_| c(2.0), &curve, 0.5, 2.0).unwrap().value < 1e-12);
    }

    #[test]
    fn trace_parameter_robustness() {
        let curve = BoundaryCurve::limacon(0.2, 512).unwrap();
        let (arc, _) = curve.arc_length_reparameterize().unwrap();
        for g in [
            Box::new(|z: C64| c(z.re)) as Box<dyn Fn(C64) -> C64>,
            Box::new(|z: C64| z * z),
            Box::new(|z: C64| c((3.0 * z.im).sin())),
        ] {
            let a = trace_norm_of(&g, &curve, 0.4, 2.0).unwrap().value;
            let b = trace_norm_of(&g, &arc, 0.4, 2.0).unwrap().value;
            assert!(a / b < 5.0 && b / a < 5.0);
        }
    }

    #[test]
    fn weighted_derivative_of_constant() {
        let s = GridSpec::new(256, 1.2).unwrap();
        let e = weighted_derivative_norm(&GridField::constant(s, c(1.0)), 0.5, 2.0).unwrap();
        assert!((e.value - (std::f64::consts::PI / 3.0).sqrt()).abs() < 0.01, "{}", e.value);
        assert_eq!(weighted_derivative_norm(&GridField::zeros(s), 0.5, 2.0).unwrap().value, 0.0);
    }

    fn tl(n: usize, f: impl Fn(C64) -> C64) -> f64 {
        let s = GridSpec::new(n, 1.5).unwrap();
        let disc = RegionMask::disc(s, c(0.0), 1.0);
        let delta: Vec<f64> = (0..s.len()).map(|i| (1.0 - s.point_at(i).norm()).max(0.0)).collect();
        let field = sample(s, f).unwrap();
        tl_seminorm_local(&field, &disc, TlParams::new(0.5, 2.0, 2.0, 0.25), Some(&delta)).unwrap().value
    }

    #[test]
    fn tl_local_examples() {
        assert_eq!(tl(64, |_| c(3.0)), 0.0);
        let (a, b) = (tl(128, |z| c(z.re)), tl(256, |z| c(z.re)));
        assert!(a > 0.0 && ((a - b) / b).abs() <= 0.1, "{a} {b}");
        // homogeneity and the local sharp function identity
        let s = GridSpec::new(64, 1.5).unwrap();
        let disc = RegionMask::disc(s, c(0.0), 1.0);
        let f = sample(s, |z| (2.0 * z).exp()).unwrap();
        let p = TlParams::new(0.4, 3.0, 2.0, 0.25);
        let v = tl_seminorm_local(&f, &disc, p, None).unwrap().value;
        let v2 = tl_seminorm_local(&f.scale(C64::new(0.0, -2.0)), &disc, p, None).unwrap().value;
        assert!((v2 - 2.0 * v).abs() < 1e-12 * v2);
        let sharp = local_sharp_field(&f, &disc, p, None).unwrap();
        assert!((lp_norm(&sharp, 3.0, &disc).unwrap() - v).abs() < 1e-10 * v);
        assert!(tl_seminorm_local(&f, &disc, TlParams::new(0.4, 2.0, 3.0, 0.25), None).is_err());
    }

    #[test]
    fn tl_algebra_and_power_rules() {
        let s = GridSpec::new(64, 1.5).unwrap();
        let disc = RegionMask::disc(s, c(0.0), 1.0);
        let p = TlParams::new(0.5, 4.0, 2.0, 0.25);
        let nrm = |f: &GridField| lp_norm(f, f64::INFINITY, &disc).unwrap() + tl_seminorm_local(f, &disc, p, None).unwrap().value;
        let semi = |f: &GridField| tl_seminorm_local(f, &disc, p, None).unwrap().value;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let f = random_probe(s, &RegionMask::full(s), 2, false, &mut rng);
            let g = random_probe(s, &RegionMask::full(s), 2, false, &mut rng);
            assert!(nrm(&f.mul(&g).unwrap()) <= nrm(&f) * nrm(&g) * (1.0 + 1e-12));
        }
        let f = random_probe(s, &RegionMask::full(s), 2, false, &mut rng);
        let fi = lp_norm(&f, f64::INFINITY, &disc).unwrap();
        let f3 = f.map(|v| v * v * v);
        assert!(semi(&f3) <= 3.0 * fi * fi * semi(&f) * (1.0 + 1e-12));
    }

    #[test]
    fn shadow_dominates_local() {
        let s = GridSpec::new(32, 1.5).unwrap();
        let disc = RegionMask::disc(s, c(0.0), 1.0);
        let f = sample(s, |z| c(z.re * z.im)).unwrap();
        let delta: Vec<f64> = (0..s.len()).map(|i| (1.0 - s.point_at(i).norm()).max(0.0)).collect();
        let loc = tl_seminorm_local(&f, &disc, TlParams::new(0.5, 2.0, 2.0, 0.5), Some(&delta)).unwrap();
        let sh = tl_seminorm_shadow(&f, &disc, TlParams::new(0.5, 2.0, 2.0, 3.0), Some(&delta)).unwrap();
        assert!(sh.value >= loc.value);
        assert_eq!(tl_seminorm_shadow(&GridField::constant(s, c(1.0)), &disc, TlParams::new(0.5, 2.0, 2.0, 3.0), None).unwrap().value, 0.0);
    }

    #[test]
    fn tl_matches_fourier_seminorm_up_to_constant() {
        // compactly supported smooth data, seminorm over a square deep inside
        let ratio = |n: usize| {
            let s = GridSpec::new(n, 2.0).unwrap();
            let f = sample(s, |z| c((-4.0 * z.norm_sqr()).exp() * (2.0 * z.re).cos())).unwrap();
            let omega = RegionMask::square(s, c(0.0), 1.5);
            let delta: Vec<f64> = (0..s.len()).map(|_| 1.0).collect();
            let t = tl_seminorm_local(&f, &omega, TlParams::new(0.5, 2.0, 2.0, 0.5), Some(&delta)).unwrap().value;
            let four = fourier_fractional(&f, 0.5);
            t / four
        };
        let (a, b) = (ratio(64), ratio(128));
        assert!(((a - b) / b).abs() <= 0.1, "{a} {b}");
    }

    fn fourier_fractional(f: &GridField, s: f64) -> f64 {
        let spec = *f.spec();
        let coef = f.fourier_coefficients();
        let n = spec.n();
        let mut acc = 0.0;
        for k in 0..n {
            for j in 0..n {
                let xi = spec.frequency(j).hypot(spec.frequency(k));
                acc += xi.powf(2.0 * s) * coef[k * n + j].norm_sqr();
            }
        }
        // unnormalized DFT: ĉ = Σ f e^{…} ≈ n²/(2L)² ∫ f e^{…}
        let l = spec.half_width();
        acc.sqrt() * 2.0 * l / (n * n) as f64
    }

    #[test]
    fn probes_and_profiles() {
        let s = GridSpec::new(32, 2.0).unwrap();
        let full = RegionMask::full(s);
        let l2 = |g: &GridField| lp_norm(g, 2.0, &full).unwrap();
        let id = operator_norm_probe(&|g| g.clone(), &l2, s, &full, 5, false, 1).unwrap();
        assert!((id.value - 1.0).abs() < 1e-10);
        let two = operator_norm_probe(&|g| g.scale(c(2.0)), &l2, s, &full, 5, false, 1).unwrap();
        assert!((two.value - 2.0).abs() < 1e-10);
        let b = operator_norm_probe(&|g| beurling(g), &l2, s, &full, 5, true, 1).unwrap();
        assert!((b.value - 1.0).abs() < 0.01);

        let small = GridSpec::new(16, 1.0).unwrap();
        let mask = RegionMask::disc(small, c(0.0), 0.8);
        let op = MaskedOperator::new(mask.clone(), Box::new(|g: &GridField| g.clone()), Box::new(|g: &GridField| g.clone()));
        let sv = singular_value_profile(&op, 8, 3).unwrap();
        assert!(sv.iter().all(|v| (v - 1.0).abs() < 1e-10));
        // rank one: g ↦ ⟨g, u⟩ v
        let u = sample(small, |z| c(1.0 + z.re)).unwrap().masked(&mask).unwrap();
        let v = sample(small, |z| z.im * C64::new(0.0, 1.0)).unwrap().masked(&mask).unwrap();
        let (u1, v1) = (u.clone(), v.clone());
        let ip = |a: &GridField, b: &GridField| -> C64 {
            a.values().iter().zip(b.values()).map(|(x, y)| x * y.conj()).sum::<C64>() * small.cell_area()
        };
        let op = MaskedOperator::new(
            mask.clone(),
            Box::new(move |g: &GridField| v1.scale(ip(g, &u1))),
            Box::new(move |g: &GridField| u.scale(ip(g, &v))),
        );
        let sv = singular_value_profile(&op, 4, 3).unwrap();
        let uu = sample(small, |z| c(1.0 + z.re)).unwrap();
        let vv = sample(small, |z| c(z.im)).unwrap();
        let expect = lp_norm(&uu, 2.0, &mask).unwrap() * lp_norm(&vv, 2.0, &mask).unwrap();
        assert!((sv[0] - expect).abs() < 1e-10 * expect);
        assert!(sv[1] < 1e-8 * expect);
        // adjoint pairing of B and its adjoint is exact
        let f = random_probe(small, &mask, 2, false, &mut ChaCha8Rng::seed_from_u64(4));
        let g = random_probe(small, &mask, 2, false, &mut ChaCha8Rng::seed_from_u64(5));
        let lhs = ip(&beurling(&f), &g);
        let rhs = ip(&f, &beurling_adjoint(&g));
        assert!((lhs - rhs).norm() < 1e-10 * lhs.norm().max(1.0));
    }
}
