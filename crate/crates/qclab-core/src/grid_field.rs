//! Uniform periodic grids over the box [−L, L)², complex fields sampled on
//! them, region masks, spectral and finite-difference Wirtinger derivatives,
//! and midpoint quadrature.
//!
//! Storage is row-major with the x index fastest: point (j, k) sits at
//! `k * n + j` and represents z = (−L + j h) + i(−L + k h).

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{invalid, QcError, Result};
use crate::fft::{fft2, signed_index};
use crate::C64;

const MAGIC: &[u8; 4] = b"QCGF";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    n: usize,
    half_width: f64,
}

impl GridSpec {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(QcError::BadGridSize(n));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(QcError::BadHalfWidth(half_width));
        }
        Ok(Self { n, half_width })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn cell_area(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, j: usize, k: usize) -> usize {
        k * self.n + j
    }

    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.n, idx / self.n)
    }

    pub fn point(&self, j: usize, k: usize) -> C64 {
        let h = self.spacing();
        C64::new(
            -self.half_width + j as f64 * h,
            -self.half_width + k as f64 * h,
        )
    }

    pub fn point_at(&self, idx: usize) -> C64 {
        let (j, k) = self.coords(idx);
        self.point(j, k)
    }

    /// Angular frequency attached to DFT index `i` along either axis.
    pub fn frequency(&self, i: usize) -> f64 {
        std::f64::consts::PI * signed_index(i, self.n) as f64 / self.half_width
    }

    /// Same spacing, twice the box.
    pub fn doubled(&self) -> GridSpec {
        GridSpec {
            n: 2 * self.n,
            half_width: 2.0 * self.half_width,
        }
    }

    /// Same box, twice the resolution.
    pub fn refined(&self) -> GridSpec {
        GridSpec {
            n: 2 * self.n,
            half_width: self.half_width,
        }
    }

    /// Nearest grid index (clamped) to a point of the box.
    pub fn nearest(&self, z: C64) -> (usize, usize) {
        let h = self.spacing();
        let f = |x: f64| -> usize {
            let i = ((x + self.half_width) / h).round();
            i.clamp(0.0, (self.n - 1) as f64) as usize
        };
        (f(z.re), f(z.im))
    }
}

/// Complex samples on a [`GridSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    spec: GridSpec,
    values: Vec<C64>,
    label: String,
}

/// Choice of derivative discretization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DerivativeMode {
    #[default]
    Spectral,
    /// Second-order central differences with step h, periodic wrap.
    CentralDifference,
}

impl GridField {
    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            spec,
            values: vec![C64::new(0.0, 0.0); spec.len()],
            label: String::new(),
        }
    }

    pub fn constant(spec: GridSpec, c: C64) -> Self {
        Self {
            spec,
            values: vec![c; spec.len()],
            label: String::new(),
        }
    }

    pub fn from_values(spec: GridSpec, values: Vec<C64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(invalid(format!(
                "expected {} values, got {}",
                spec.len(),
                values.len()
            )));
        }
        check_finite(&spec, &values)?;
        Ok(Self {
            spec,
            values,
            label: String::new(),
        })
    }

    /// Trusted constructor for internal results known to be finite.
    pub(crate) fn from_raw(spec: GridSpec, values: Vec<C64>) -> Self {
        debug_assert_eq!(values.len(), spec.len());
        Self {
            spec,
            values,
            label: String::new(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn value(&self, j: usize, k: usize) -> C64 {
        self.values[self.spec.index(j, k)]
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> GridField {
        GridField::from_raw(self.spec, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise map with access to the grid point.
    pub fn map_with_point(&self, f: impl Fn(C64, C64) -> C64) -> GridField {
        let vals = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| f(self.spec.point_at(i), v))
            .collect();
        GridField::from_raw(self.spec, vals)
    }

    pub fn zip_with(&self, other: &GridField, f: impl Fn(C64, C64) -> C64) -> Result<GridField> {
        same_grid(&self.spec, &other.spec)?;
        Ok(GridField::from_raw(
            self.spec,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn add(&self, other: &GridField) -> Result<GridField> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridField) -> Result<GridField> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &GridField) -> Result<GridField> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: C64) -> GridField {
        self.map(|v| v * c)
    }

    pub fn conj(&self) -> GridField {
        self.map(|v| v.conj())
    }

    /// Zero outside the mask.
    pub fn masked(&self, mask: &RegionMask) -> Result<GridField> {
        same_grid(&self.spec, &mask.spec)?;
        Ok(GridField::from_raw(
            self.spec,
            self.values
                .iter()
                .zip(&mask.bits)
                .map(|(&v, &b)| if b { v } else { C64::new(0.0, 0.0) })
                .collect(),
        ))
    }

    pub fn mean(&self) -> C64 {
        self.values.iter().sum::<C64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Apply a Fourier multiplier given as a function of angular frequency (ξ₁, ξ₂).
    pub fn apply_symbol(&self, symbol: impl Fn(f64, f64) -> C64) -> GridField {
        let n = self.spec.n;
        let mut data = self.values.clone();
        fft2(&mut data, n, false);
        let freqs: Vec<f64> = (0..n).map(|i| self.spec.frequency(i)).collect();
        for k in 0..n {
            for j in 0..n {
                data[k * n + j] *= symbol(freqs[j], freqs[k]);
            }
        }
        fft2(&mut data, n, true);
        GridField::from_raw(self.spec, data)
    }

    /// Unnormalized 2-D DFT coefficients, same layout as the values.
    pub fn fourier_coefficients(&self) -> Vec<C64> {
        let mut data = self.values.clone();
        fft2(&mut data, self.spec.n, false);
        data
    }

    /// Bilinear interpolation with periodic wrap.
    pub fn interpolate(&self, z: C64) -> C64 {
        let n = self.spec.n;
        let h = self.spec.spacing();
        let l = self.spec.half_width;
        let u = (z.re + l) / h;
        let v = (z.im + l) / h;
        let j0 = u.floor();
        let k0 = v.floor();
        let (a, b) = (u - j0, v - k0);
        let wrap = |i: f64| -> usize { (i as i64).rem_euclid(n as i64) as usize };
        let (j0, k0) = (wrap(j0), wrap(k0));
        let (j1, k1) = ((j0 + 1) % n, (k0 + 1) % n);
        self.value(j0, k0) * ((1.0 - a) * (1.0 - b))
            + self.value(j1, k0) * (a * (1.0 - b))
            + self.value(j0, k1) * ((1.0 - a) * b)
            + self.value(j1, k1) * (a * b)
    }

    /// True when every sample with |x| or |y| beyond `radius` has modulus ≤ `tol`.
    pub fn supported_within(&self, radius: f64, tol: f64) -> bool {
        self.values.iter().enumerate().all(|(i, v)| {
            let z = self.spec.point_at(i);
            (z.re.abs() <= radius && z.im.abs() <= radius) || v.norm() <= tol
        })
    }

    /// Zero-extend onto the doubled box (same spacing).
    pub fn zero_padded(&self) -> GridField {
        let big = self.spec.doubled();
        let n = self.spec.n;
        let off = n / 2;
        let mut out = vec![C64::new(0.0, 0.0); big.len()];
        for k in 0..n {
            for j in 0..n {
                out[big.index(j + off, k + off)] = self.value(j, k);
            }
        }
        GridField::from_raw(big, out).with_label(self.label.clone())
    }

    /// Inverse of [`zero_padded`](Self::zero_padded): the central block.
    pub fn cropped_to(&self, spec: GridSpec) -> Result<GridField> {
        if spec.doubled() != self.spec {
            return Err(QcError::GridMismatch);
        }
        let off = spec.n / 2;
        let mut out = Vec::with_capacity(spec.len());
        for k in 0..spec.n {
            for j in 0..spec.n {
                out.push(self.value(j + off, k + off));
            }
        }
        Ok(GridField::from_raw(spec, out))
    }

    /// Enforce supp ⊂ [−L/2, L/2]² by doubling the box (and n) as needed.
    pub fn padded_for_support(&self, tol: f64) -> GridField {
        let mut f = self.clone();
        while !f.supported_within(0.5 * f.spec.half_width, tol) && f.spec.n <= 4096 {
            f = f.zero_padded();
        }
        f
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 16 * self.values.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.spec.n as u32).to_le_bytes());
        out.extend_from_slice(&self.spec.half_width.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<GridField> {
        if bytes.len() < 16 || &bytes[0..4] != MAGIC {
            return Err(QcError::Format("missing QCGF header".into()));
        }
        let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let l = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let spec = GridSpec::new(n, l)?;
        let body = &bytes[16..];
        if body.len() != 16 * spec.len() {
            return Err(QcError::Format(format!(
                "payload has {} bytes, expected {}",
                body.len(),
                16 * spec.len()
            )));
        }
        let values = body
            .chunks_exact(16)
            .map(|c| {
                C64::new(
                    f64::from_le_bytes(c[0..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..16].try_into().unwrap()),
                )
            })
            .collect();
        GridField::from_values(spec, values)
    }

    pub fn write_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_binary(path: impl AsRef<Path>) -> Result<GridField> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        GridField::from_bytes(&bytes)
    }

    /// CSV rows `j,k,x,y,re,im`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["j", "k", "x", "y", "re", "im"])?;
        for (i, v) in self.values.iter().enumerate() {
            let (j, k) = self.spec.coords(i);
            let z = self.spec.point(j, k);
            wr.write_record(&[
                j.to_string(),
                k.to_string(),
                z.re.to_string(),
                z.im.to_string(),
                v.re.to_string(),
                v.im.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn check_finite(spec: &GridSpec, values: &[C64]) -> Result<()> {
    if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
        let (j, k) = spec.coords(i);
        return Err(QcError::NonFinite { j, k });
    }
    Ok(())
}

pub(crate) fn same_grid(a: &GridSpec, b: &GridSpec) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(QcError::GridMismatch)
    }
}

/// values[j,k] = f(z_{j,k}); non-finite output is rejected with its location.
pub fn sample(spec: GridSpec, f: impl Fn(C64) -> C64) -> Result<GridField> {
    let values: Vec<C64> = (0..spec.len()).map(|i| f(spec.point_at(i))).collect();
    check_finite(&spec, &values)?;
    Ok(GridField::from_raw(spec, values))
}

/// Membership bits on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionMask {
    spec: GridSpec,
    bits: Vec<bool>,
}

impl RegionMask {
    pub fn full(spec: GridSpec) -> Self {
        Self {
            spec,
            bits: vec![true; spec.len()],
        }
    }

    pub fn empty(spec: GridSpec) -> Self {
        Self {
            spec,
            bits: vec![false; spec.len()],
        }
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(C64) -> bool) -> Self {
        Self {
            spec,
            bits: (0..spec.len()).map(|i| f(spec.point_at(i))).collect(),
        }
    }

    pub fn from_bits(spec: GridSpec, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != spec.len() {
            return Err(invalid("mask length does not match grid"));
        }
        Ok(Self { spec, bits })
    }

    pub fn disc(spec: GridSpec, center: C64, radius: f64) -> Self {
        Self::from_fn(spec, |z| (z - center).norm() < radius)
    }

    /// Open axis-parallel box with the given center and half side.
    pub fn square(spec: GridSpec, center: C64, half_side: f64) -> Self {
        Self::from_fn(spec, |z| {
            (z.re - center.re).abs() < half_side && (z.im - center.im).abs() < half_side
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn contains(&self, j: usize, k: usize) -> bool {
        self.bits[self.spec.index(j, k)]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn area(&self) -> f64 {
        self.count() as f64 * self.spec.cell_area()
    }

    pub fn complement(&self) -> RegionMask {
        RegionMask {
            spec: self.spec,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn intersect(&self, other: &RegionMask) -> Result<RegionMask> {
        same_grid(&self.spec, &other.spec)?;
        Ok(RegionMask {
            spec: self.spec,
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| *a && *b).collect(),
        })
    }

    pub fn union(&self, other: &RegionMask) -> Result<RegionMask> {
        same_grid(&self.spec, &other.spec)?;
        Ok(RegionMask {
            spec: self.spec,
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| *a || *b).collect(),
        })
    }

    /// Extend by `false` onto the doubled box, as [`GridField::zero_padded`].
    pub fn zero_padded(&self) -> RegionMask {
        let big = self.spec.doubled();
        let n = self.spec.n;
        let off = n / 2;
        let mut bits = vec![false; big.len()];
        for k in 0..n {
            for j in 0..n {
                bits[big.index(j + off, k + off)] = self.contains(j, k);
            }
        }
        RegionMask { spec: big, bits }
    }

    pub fn is_disjoint(&self, other: &RegionMask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| !(*a && *b))
    }

    /// The sharp indicator χ as a field.
    pub fn indicator(&self) -> GridField {
        GridField::from_raw(
            self.spec,
            self.bits
                .iter()
                .map(|&b| C64::new(if b { 1.0 } else { 0.0 }, 0.0))
                .collect(),
        )
    }

    /// Indices of member points in storage order.
    pub fn indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    /// Euclidean distance from each member point to the nearest non-member point
    /// (0 outside). Exact on the lattice; a fallback when no curve is available.
    pub fn distance_to_complement(&self) -> Vec<f64> {
        let n = self.spec.n;
        let big = 1e20;
        let mut g: Vec<f64> = self.bits.iter().map(|&b| if b { big } else { 0.0 }).collect();
        let mut line = vec![0.0; n];
        let mut out = vec![0.0; n];
        for k in 0..n {
            for j in 0..n {
                line[j] = g[k * n + j];
            }
            edt_1d(&line, &mut out);
            for j in 0..n {
                g[k * n + j] = out[j];
            }
        }
        for j in 0..n {
            for k in 0..n {
                line[k] = g[k * n + j];
            }
            edt_1d(&line, &mut out);
            for k in 0..n {
                g[k * n + j] = out[k];
            }
        }
        let h = self.spec.spacing();
        g.iter().map(|&d2| if d2 >= big { f64::INFINITY } else { d2.sqrt() * h }).collect()
    }
}

/// Squared-distance transform of a sampled function (lower envelope of parabolas).
fn edt_1d(f: &[f64], d: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let inter = |q: usize, p: usize| {
        ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64))
    };
    for q in 1..n {
        let mut s = inter(q, v[k]);
        while s <= z[k] {
            k -= 1;
            s = inter(q, v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, dq) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dx = q as f64 - p as f64;
        *dq = dx * dx + f[p];
    }
}

/// Σ over masked points of values·h² (midpoint rule).
pub fn quadrature_integral(f: &GridField, mask: &RegionMask) -> Result<C64> {
    same_grid(&f.spec, &mask.spec)?;
    let s: C64 = f
        .values
        .iter()
        .zip(&mask.bits)
        .filter(|(_, &b)| b)
        .map(|(v, _)| *v)
        .sum();
    Ok(s * f.spec.cell_area())
}

/// (Σ |f|^p h²)^{1/p} over the mask; `p = f64::INFINITY` gives the masked max.
pub fn lp_norm(f: &GridField, p: f64, mask: &RegionMask) -> Result<f64> {
    same_grid(&f.spec, &mask.spec)?;
    if p.is_nan() || p < 1.0 {
        return Err(invalid(format!("lp_norm needs p >= 1, got {p}")));
    }
    let it = f.values.iter().zip(&mask.bits).filter(|(_, &b)| b).map(|(v, _)| v.norm());
    if p.is_infinite() {
        return Ok(it.fold(0.0, f64::max));
    }
    let s: f64 = it.map(|a| a.powf(p)).sum();
    Ok((s * f.spec.cell_area()).powf(1.0 / p))
}

/// L² norm computed on the Fourier side (Parseval), for cross-checking.
pub fn fourier_l2_norm(f: &GridField) -> f64 {
    let c = f.fourier_coefficients();
    let n2 = f.spec.len() as f64;
    let s: f64 = c.iter().map(|v| v.norm_sqr()).sum();
    (s / n2 * f.spec.cell_area()).sqrt()
}

/// ∂^a ∂̄^b f with ∂ = ½(∂x − i∂y), ∂̄ = ½(∂x + i∂y), spectral mode.
pub fn wirtinger_derivative(f: &GridField, order: (u32, u32)) -> GridField {
    wirtinger_derivative_with(f, order, DerivativeMode::Spectral)
}

pub fn wirtinger_derivative_with(f: &GridField, order: (u32, u32), mode: DerivativeMode) -> GridField {
    let (a, b) = order;
    if a == 0 && b == 0 {
        return f.clone();
    }
    let half_i = C64::new(0.0, 0.5);
    match mode {
        DerivativeMode::Spectral => f.apply_symbol(|x1, x2| {
            let d = half_i * C64::new(x1, -x2);
            let db = half_i * C64::new(x1, x2);
            d.powu(a) * db.powu(b)
        }),
        DerivativeMode::CentralDifference => {
            let mut g = f.clone();
            for _ in 0..a {
                g = central_wirtinger(&g, false);
            }
            for _ in 0..b {
                g = central_wirtinger(&g, true);
            }
            g
        }
    }
}

fn central_wirtinger(f: &GridField, bar: bool) -> GridField {
    let dx = central_partial(f, true);
    let dy = central_partial(f, false);
    let s = if bar { 1.0 } else { -1.0 };
    dx.zip_with(&dy, |u, v| 0.5 * (u + C64::new(0.0, s) * v)).expect("same grid")
}

fn central_partial(f: &GridField, along_x: bool) -> GridField {
    let n = f.spec.n;
    let inv = 0.5 / f.spec.spacing();
    let mut out = vec![C64::new(0.0, 0.0); n * n];
    for k in 0..n {
        for j in 0..n {
            let (p, m) = if along_x {
                (f.value((j + 1) % n, k), f.value((j + n - 1) % n, k))
            } else {
                (f.value(j, (k + 1) % n), f.value(j, (k + n - 1) % n))
            };
            out[k * n + j] = (p - m) * inv;
        }
    }
    GridField::from_raw(f.spec, out)
}

/// Real partial derivative ∂x^a ∂y^b.
pub fn partial_derivative(f: &GridField, order: (u32, u32), mode: DerivativeMode) -> GridField {
    let (a, b) = order;
    if a == 0 && b == 0 {
        return f.clone();
    }
    match mode {
        DerivativeMode::Spectral => f.apply_symbol(|x1, x2| {
            C64::new(0.0, x1).powu(a) * C64::new(0.0, x2).powu(b)
        }),
        DerivativeMode::CentralDifference => {
            let mut g = f.clone();
            for _ in 0..a {
                g = central_partial(&g, true);
            }
            for _ in 0..b {
                g = central_partial(&g, false);
            }
            g
        }
    }
}

/// C^∞ step: 1 for t ≤ −1, 0 for t ≥ 1, smooth in between.
pub fn smooth_step(t: f64) -> f64 {
    fn g(u: f64) -> f64 {
        if u > 0.0 {
            (-1.0 / u).exp()
        } else {
            0.0
        }
    }
    let u = 0.5 * (1.0 - t);
    let a = g(u);
    let b = g(1.0 - u);
    a / (a + b)
}

/// Indicator smoothed across a band of total width `width` centred on the
/// zero set of a signed distance (negative inside).
pub fn smoothed_indicator(spec: GridSpec, signed_distance: impl Fn(C64) -> f64, width: f64) -> GridField {
    let half = 0.5 * width;
    GridField::from_raw(
        spec,
        (0..spec.len())
            .map(|i| C64::new(smooth_step(signed_distance(spec.point_at(i)) / half), 0.0))
            .collect(),
    )
}

/// Separable window equal to 1 on |x|,|y| ≤ `inner` and decaying to ~1e-15 by
/// `inner + 8·edge`; Gaussian-smooth so spectral derivatives stay accurate.
pub fn window(spec: GridSpec, inner: f64, edge: f64) -> GridField {
    let w1 = |x: f64| 0.5 * (libm::erf((x + inner) / edge) - libm::erf((x - inner) / edge));
    GridField::from_raw(
        spec,
        (0..spec.len())
            .map(|i| {
                let z = spec.point_at(i);
                C64::new(w1(z.re) * w1(z.im), 0.0)
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn spec_validation() {
        assert!(GridSpec::new(6, 1.0).is_err());
        assert!(GridSpec::new(4, 1.0).is_err());
        assert!(GridSpec::new(16, 0.0).is_err());
        assert!(GridSpec::new(16, f64::NAN).is_err());
        let s = GridSpec::new(16, 2.0).unwrap();
        assert_eq!(s.spacing(), 0.25);
    }

    #[test]
    fn sample_zero_and_identity() {
        let s = GridSpec::new(8, 1.0).unwrap();
        let z0 = sample(s, |_| C64::new(0.0, 0.0)).unwrap();
        assert!(z0.values().iter().all(|v| v.norm() == 0.0));
        let id = sample(s, |z| z).unwrap();
        assert_eq!(id.value(0, 0), C64::new(-1.0, -1.0));
        assert_eq!(id.value(3, 5), s.point(3, 5));
    }

    #[test]
    fn sample_rejects_non_finite() {
        let s = GridSpec::new(8, 1.0).unwrap();
        let err = sample(s, |z| if z.re > 0.4 { c(f64::NAN) } else { c(1.0) }).unwrap_err();
        assert!(matches!(err, QcError::NonFinite { .. }));
    }

    #[test]
    fn disc_area_by_quadrature() {
        let s = GridSpec::new(256, 2.0).unwrap();
        let chi = RegionMask::disc(s, c(0.0), 1.0).indicator();
        let area = quadrature_integral(&chi, &RegionMask::full(s)).unwrap().re;
        assert!((area - PI).abs() < 0.2, "{area}");
        let s = GridSpec::new(512, 2.0).unwrap();
        let disc = RegionMask::disc(s, c(0.0), 1.0);
        let area = quadrature_integral(&GridField::constant(s, c(1.0)), &disc).unwrap().re;
        assert!((area - PI).abs() < 0.05);
        let first = quadrature_integral(&sample(s, |z| z).unwrap(), &disc).unwrap();
        assert!(first.norm() < 0.05);
    }

    #[test]
    fn box_area_exact() {
        let s = GridSpec::new(32, 1.0).unwrap();
        let v = quadrature_integral(&GridField::constant(s, c(1.0)), &RegionMask::full(s)).unwrap();
        assert!((v.re - 4.0).abs() < 1e-12);
    }

    #[test]
    fn quadrature_additive_over_disjoint_masks() {
        let s = GridSpec::new(64, 1.0).unwrap();
        let f = sample(s, |z| (z * z).exp()).unwrap();
        let a = RegionMask::disc(s, c(0.0), 0.5);
        let b = a.complement();
        let total = quadrature_integral(&f, &RegionMask::full(s)).unwrap();
        let parts = quadrature_integral(&f, &a).unwrap() + quadrature_integral(&f, &b).unwrap();
        assert!((total - parts).norm() < 1e-12 * total.norm().max(1.0));
    }

    #[test]
    fn lp_norm_cases() {
        let s = GridSpec::new(512, 2.0).unwrap();
        let disc = RegionMask::disc(s, c(0.0), 1.0);
        let chi = disc.indicator();
        let v = lp_norm(&chi, 2.0, &RegionMask::full(s)).unwrap();
        assert!((v - PI.sqrt()).abs() < 0.02);
        let k = GridField::constant(s, C64::new(0.0, 3.0));
        let v = lp_norm(&k, 3.0, &disc).unwrap();
        assert!((v - 3.0 * disc.area().powf(1.0 / 3.0)).abs() < 1e-9);
        let id = sample(s, |z| z).unwrap();
        let m = lp_norm(&id, f64::INFINITY, &RegionMask::full(s)).unwrap();
        assert!((m - 2.0f64.sqrt() * 2.0).abs() <= s.spacing() * 2.0f64.sqrt());
        assert!(lp_norm(&id, 0.5, &disc).is_err());
    }

    #[test]
    fn parseval() {
        let s = GridSpec::new(64, 1.5).unwrap();
        let f = sample(s, |z| (z * C64::new(0.3, 1.0)).sin() * (-z.norm_sqr()).exp()).unwrap();
        let a = lp_norm(&f, 2.0, &RegionMask::full(s)).unwrap();
        let b = fourier_l2_norm(&f);
        assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn wirtinger_on_windowed_z() {
        let s = GridSpec::new(256, 2.0).unwrap();
        let w = window(s, 1.2, 0.08);
        let zf = sample(s, |z| z).unwrap().mul(&w).unwrap();
        let zb = zf.conj();
        let interior = RegionMask::square(s, c(0.0), 0.6);
        let d = wirtinger_derivative(&zf, (1, 0));
        let db = wirtinger_derivative(&zf, (0, 1));
        let e1 = d.map(|v| v - 1.0);
        assert!(lp_norm(&e1, f64::INFINITY, &interior).unwrap() < 1e-8);
        assert!(lp_norm(&db, f64::INFINITY, &interior).unwrap() < 1e-8);
        let d = wirtinger_derivative(&zb, (1, 0));
        let db = wirtinger_derivative(&zb, (0, 1)).map(|v| v - 1.0);
        assert!(lp_norm(&d, f64::INFINITY, &interior).unwrap() < 1e-8);
        assert!(lp_norm(&db, f64::INFINITY, &interior).unwrap() < 1e-8);
    }

    #[test]
    fn plane_wave_eigenvalues() {
        let s = GridSpec::new(64, 1.0).unwrap();
        let (m1, m2) = (3.0, -5.0);
        let (x1, x2) = (PI * m1 / s.half_width(), PI * m2 / s.half_width());
        let f = sample(s, |z| C64::new(0.0, x1 * z.re + x2 * z.im).exp()).unwrap();
        let d = wirtinger_derivative(&f, (1, 0));
        let lam = C64::new(0.0, 0.5) * C64::new(x1, -x2);
        for (a, b) in d.values().iter().zip(f.values()) {
            assert!((a - lam * b).norm() <= 1e-10 * lam.norm());
        }
        // central differences: symbol i·sin(ξh)/h per axis
        let h = s.spacing();
        let dc = wirtinger_derivative_with(&f, (1, 0), DerivativeMode::CentralDifference);
        let lam_c = C64::new(0.0, 0.5) * C64::new((x1 * h).sin() / h, -(x2 * h).sin() / h);
        for (a, b) in dc.values().iter().zip(f.values()) {
            assert!((a - lam_c * b).norm() <= 1e-10 * lam_c.norm());
        }
        assert!((lam_c - lam).norm() < 0.2 * lam.norm());
    }

    #[test]
    fn mixed_derivatives_commute() {
        let s = GridSpec::new(32, 1.0).unwrap();
        let f = sample(s, |z| (C64::new(0.0, PI) * z.re).exp() * (z.im * PI).cos()).unwrap();
        let a = wirtinger_derivative(&wirtinger_derivative(&f, (1, 0)), (0, 1));
        let b = wirtinger_derivative(&wirtinger_derivative(&f, (0, 1)), (1, 0));
        let diff = a.sub(&b).unwrap().max_abs();
        assert!(diff < 1e-12 * a.max_abs().max(1.0));
    }

    #[test]
    fn binary_round_trip() {
        let s = GridSpec::new(8, 1.25).unwrap();
        let f = sample(s, |z| z * z + C64::new(0.5, -2.0)).unwrap();
        let bytes = f.to_bytes();
        assert_eq!(&bytes[0..4], b"QCGF");
        assert_eq!(bytes.len(), 16 + 16 * 64);
        let g = GridField::from_bytes(&bytes).unwrap();
        assert_eq!(f.values(), g.values());
        assert!(GridField::from_bytes(&bytes[..20]).is_err());
    }

    #[test]
    fn padding_round_trip() {
        let s = GridSpec::new(16, 1.0).unwrap();
        let f = sample(s, |z| z).unwrap();
        assert!(!f.supported_within(0.5, 1e-14));
        let p = f.padded_for_support(1e-14);
        assert_eq!(p.spec().n(), 32);
        assert_eq!(p.spec().spacing(), s.spacing());
        assert_eq!(p.cropped_to(s).unwrap().values(), f.values());
    }

    #[test]
    fn distance_transform_matches_disc() {
        let s = GridSpec::new(128, 2.0).unwrap();
        let m = RegionMask::disc(s, c(0.0), 1.0);
        let d = m.distance_to_complement();
        let (j, k) = s.nearest(c(0.0));
        let d0 = d[s.index(j, k)];
        assert!((d0 - 1.0).abs() < 2.0 * s.spacing());
        let out = m.complement().indices()[0];
        assert_eq!(d[out], 0.0);
    }

    #[test]
    fn smooth_step_limits() {
        assert_eq!(smooth_step(-1.5), 1.0);
        assert_eq!(smooth_step(1.5), 0.0);
        assert!((smooth_step(0.0) - 0.5).abs() < 1e-15);
        assert!((smooth_step(0.3) + smooth_step(-0.3) - 1.0).abs() < 1e-14);
    }
}
