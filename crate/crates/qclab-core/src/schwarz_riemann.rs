//! The Schwarz operator A(g)(z) = ∫_T (e^{it}+z)/(e^{it}−z) g(t) dt on the
//! unit disc, the derivative identities it satisfies, the Kellogg boundary
//! relation for the argument of φ', and a damped fixed-point computation of
//! the Riemann map of a smooth Jordan domain.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::io::Write;

use crate::domain_geometry::BoundaryCurve;
use crate::error::{invalid, QcError, Result};
use crate::fft::{fft1, signed_index};
use crate::grid_field::{GridField, GridSpec, RegionMask};
use crate::norm_estimators::{periodic_besov_seminorm, tl_seminorm_local, weighted_derivative_norm, NormEstimate, TlParams};
use crate::C64;

const SERIES_CUTOFF: f64 = 1e-14;

/// Samples of a function on T at t_j = 2πj/M.
#[derive(Clone, Debug)]
pub struct CircleFunction {
    values: Vec<C64>,
}

impl CircleFunction {
    pub fn new(values: Vec<C64>) -> Result<Self> {
        let m = values.len();
        if m < 4 || !m.is_power_of_two() {
            return Err(invalid(format!("circle sample count {m} must be a power of two >= 4")));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(invalid("non-finite circle sample"));
        }
        Ok(Self { values })
    }

    pub fn from_fn(m: usize, f: impl Fn(f64) -> C64) -> Result<Self> {
        Self::new((0..m).map(|j| f(TAU * j as f64 / m as f64)).collect())
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn node(&self, j: usize) -> f64 {
        TAU * j as f64 / self.len() as f64
    }

    /// ĝ(n) = (1/2π)∫ g e^{−int} dt, in FFT order.
    pub fn coefficients(&self) -> Vec<C64> {
        let mut c = self.values.clone();
        fft1(&mut c, false);
        let m = self.len() as f64;
        c.iter_mut().for_each(|v| *v /= m);
        c
    }

    pub fn from_coefficients(coeffs: &[C64]) -> Result<Self> {
        let mut v = coeffs.to_vec();
        fft1(&mut v, true);
        let m = v.len() as f64;
        v.iter_mut().for_each(|x| *x *= m);
        Self::new(v)
    }

    /// Trigonometric interpolant at an arbitrary t (Nyquist term split).
    pub fn eval(&self, t: f64) -> C64 {
        eval_coeffs(&self.coefficients(), t)
    }

    /// Spectral derivative of the given order.
    pub fn derivative(&self, order: u32) -> CircleFunction {
        if order == 0 {
            return self.clone();
        }
        let m = self.len();
        let mut c = self.coefficients();
        for (i, v) in c.iter_mut().enumerate() {
            if i == m / 2 {
                *v = C64::new(0.0, 0.0);
                continue;
            }
            *v *= C64::new(0.0, signed_index(i, m) as f64).powu(order);
        }
        Self::from_coefficients(&c).expect("same length")
    }

    /// ∫_T g dt by the trapezoid rule.
    pub fn integral(&self) -> C64 {
        self.values.iter().sum::<C64>() * (TAU / self.len() as f64)
    }
}

fn eval_coeffs(c: &[C64], t: f64) -> C64 {
    let m = c.len();
    let mut s = C64::new(0.0, 0.0);
    for (i, &v) in c.iter().enumerate() {
        if i == m / 2 {
            let k = (m / 2) as f64;
            s += v * (k * t).cos();
        } else {
            s += v * C64::from_polar(1.0, signed_index(i, m) as f64 * t);
        }
    }
    s
}

/// Taylor coefficients a_n of A(g)(z) = Σ a_n z^n, truncated.
fn schwarz_taylor(g: &CircleFunction) -> Vec<C64> {
    let m = g.len();
    let c = g.coefficients();
    let mut a = Vec::with_capacity(m / 2 + 1);
    a.push(TAU * c[0]);
    for n in 1..m / 2 {
        a.push(2.0 * TAU * c[n]);
    }
    a.push(TAU * c[m / 2]);
    let last = a.iter().rposition(|v| v.norm() >= 2.0 * TAU * SERIES_CUTOFF).unwrap_or(0);
    a.truncate(last + 1);
    a
}

fn horner(a: &[C64], z: C64) -> C64 {
    a.iter().rev().fold(C64::new(0.0, 0.0), |s, &c| s * z + c)
}

fn horner_derivative(a: &[C64], z: C64) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for n in (1..a.len()).rev() {
        s = s * z + a[n] * n as f64;
    }
    s
}

fn check_disc(z: C64) -> Result<()> {
    if z.norm() < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("point {z} is not in the open unit disc")))
    }
}

/// A(g) at each point by the truncated power series.
pub fn schwarz_a(g: &CircleFunction, zs: &[C64]) -> Result<Vec<C64>> {
    zs.iter().try_for_each(|&z| check_disc(z))?;
    let a = schwarz_taylor(g);
    Ok(zs.iter().map(|&z| horner(&a, z)).collect())
}

/// A(g)(z) by the trapezoid rule on the kernel itself.
pub fn schwarz_a_direct(g: &CircleFunction, z: C64) -> Result<C64> {
    check_disc(z)?;
    let h = TAU / g.len() as f64;
    let s: C64 = g
        .values
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            let e = C64::from_polar(1.0, g.node(j));
            (e + z) / (e - z) * v
        })
        .sum();
    Ok(s * h)
}

/// A(g)'(z) from the mean-zero form ∫ 2e^{it}(g(t) − g(s))/(e^{it} − z)² dt, z = re^{is}.
/// The trapezoid error decays like r^M, so g is resampled through its
/// interpolant onto enough nodes for |z|.
pub fn schwarz_a_derivative(g: &CircleFunction, z: C64) -> Result<C64> {
    check_disc(z)?;
    let fine = oversampled(g, z.norm());
    let gs = if z.norm() > 0.0 { g.eval(z.arg()) } else { fine.values[0] };
    let h = TAU / fine.len() as f64;
    let s: C64 = fine
        .values
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            let e = C64::from_polar(1.0, fine.node(j));
            2.0 * e * (v - gs) / ((e - z) * (e - z))
        })
        .sum();
    Ok(s * h)
}

fn oversampled(g: &CircleFunction, r: f64) -> CircleFunction {
    let m = g.len();
    let need = ((40.0 / (1.0 - r).max(1e-4)) as usize).next_power_of_two().min(1 << 16);
    if need <= m {
        return g.clone();
    }
    let c = g.coefficients();
    let mut big = vec![C64::new(0.0, 0.0); need];
    for (i, &v) in c.iter().enumerate() {
        let k = signed_index(i, m);
        if i == m / 2 {
            big[m / 2] += 0.5 * v;
            big[need - m / 2] += 0.5 * v;
        } else {
            big[k.rem_euclid(need as i64) as usize] += v;
        }
    }
    CircleFunction::from_coefficients(&big).expect("power of two")
}

/// A(g)'(z) by differentiating the series.
pub fn schwarz_a_derivative_series(g: &CircleFunction, z: C64) -> Result<C64> {
    check_disc(z)?;
    Ok(horner_derivative(&schwarz_taylor(g), z))
}

fn test_points() -> Vec<C64> {
    let mut pts = vec![C64::new(0.0, 0.0)];
    for &r in &[0.25, 0.5, 0.7, 0.85] {
        for k in 0..16 {
            pts.push(C64::from_polar(r, TAU * (k as f64 + 0.37) / 16.0));
        }
    }
    pts
}

/// max |iz·A(g^{(j−1)})'(z) − A(g^{(j)})(z)| over a fixed set of disc points.
pub fn g_recursion_residual(g: &CircleFunction, j: u32) -> Result<f64> {
    if !(1..=3).contains(&j) {
        return Err(invalid("recursion depth j must be 1, 2 or 3"));
    }
    let prev = g.derivative(j - 1);
    let cur = g.derivative(j);
    let pts = test_points();
    let rhs = schwarz_a(&cur, &pts)?;
    let mut worst = 0.0f64;
    for (&z, r) in pts.iter().zip(rhs) {
        let lhs = C64::new(0.0, 1.0) * z * schwarz_a_derivative(&prev, z)?;
        worst = worst.max((lhs - r).norm());
    }
    Ok(worst)
}

fn wrap(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(TAU) - PI;
    if r == -PI {
        PI
    } else {
        r
    }
}

fn unwrap_phase(v: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len());
    let mut acc = v[0];
    out.push(acc);
    for w in v.windows(2) {
        acc += wrap(w[1] - w[0]);
        out.push(acc);
    }
    out
}

fn check_monotone(theta: &[f64]) -> Result<()> {
    let ok = theta.windows(2).all(|w| w[1] > w[0]) && theta[theta.len() - 1] < theta[0] + TAU;
    if ok {
        Ok(())
    } else {
        Err(QcError::NonMonotone)
    }
}

/// arg γ'(t_j) of a curve at its own nodes.
pub fn arg_derivative(curve: &BoundaryCurve) -> Result<CircleFunction> {
    CircleFunction::from_real(&curve.derivatives().iter().map(|d| d.arg()).collect::<Vec<_>>())
}

/// γ(t) = −t − π/2 + [arg w'](θ(t)); `theta` holds θ(t_j) for the same nodes.
pub fn kellogg_gamma(arg_wprime: &CircleFunction, theta: &[f64]) -> Result<CircleFunction> {
    let m = arg_wprime.len();
    if theta.len() != m {
        return Err(invalid("correspondence and arg w' must share nodes"));
    }
    check_monotone(theta)?;
    let a = unwrap_phase(&arg_wprime.real_values());
    let closing = a[m - 1] + wrap(a[0] - a[m - 1]) - a[0];
    if (closing - TAU).abs() > 1e-6 {
        return Err(invalid(format!("arg w' winds by {:.3} turns, expected 1", closing / TAU)));
    }
    // arg w'(t) − t is periodic; compose through its interpolant
    let periodic: Vec<f64> = a.iter().enumerate().map(|(j, &v)| v - arg_wprime.node(j)).collect();
    let coeffs = CircleFunction::from_real(&periodic)?.coefficients();
    let mut gamma: Vec<f64> = theta
        .iter()
        .enumerate()
        .map(|(j, &th)| -arg_wprime.node(j) - FRAC_PI_2 + th + eval_coeffs(&coeffs, th).re)
        .collect();
    let shift = gamma[0] - wrap(gamma[0]);
    gamma.iter_mut().for_each(|g| *g -= shift);
    CircleFunction::from_real(&gamma)
}

/// Largest jump between consecutive samples, closing gap included.
pub fn max_jump(values: &[f64]) -> f64 {
    let m = values.len();
    (0..m).map(|j| (values[(j + 1) % m] - values[j]).abs()).fold(0.0, f64::max)
}

#[derive(Clone, Debug)]
pub struct RiemannOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub lambda: f64,
    /// Image of 0; the curve centroid when `None`.
    pub center: Option<C64>,
    /// Side count of the disc grid carrying Ã and φ'.
    pub grid: usize,
}

impl Default for RiemannOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_iter: 200,
            lambda: 0.5,
            center: None,
            grid: 128,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RiemannMapResult {
    /// θ(t_j), strictly increasing, θ(0) = 0.
    pub theta: Vec<f64>,
    pub gamma: CircleFunction,
    /// |φ'(e^{it_j})|.
    pub boundary_speed: Vec<f64>,
    /// Ã = log φ' on the disc grid (zero off the disc).
    pub a_tilde: GridField,
    pub dphi: GridField,
    pub disc: RegionMask,
    pub iterations: usize,
    pub residual: f64,
    pub min_abs_dphi: f64,
    pub lambda: f64,
    pub history: Vec<f64>,
    taylor: Vec<C64>,
}

impl RiemannMapResult {
    /// Ã(z) = (i/2π)A(γ)(z) + log of the length scale.
    pub fn a_tilde_at(&self, z: C64) -> Result<C64> {
        check_disc(z)?;
        Ok(horner(&self.taylor, z))
    }

    pub fn a_tilde_derivative_at(&self, z: C64) -> Result<C64> {
        check_disc(z)?;
        Ok(horner_derivative(&self.taylor, z))
    }

    /// Ã' on the same grid as [`Self::a_tilde`].
    pub fn a_tilde_derivative(&self) -> GridField {
        disc_field(*self.a_tilde.spec(), |z| horner_derivative(&self.taylor, z))
    }

    /// CSV with columns t, theta, |phi'|.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "theta", "abs_dphi"])?;
        let m = self.theta.len();
        for j in 0..m {
            let t = TAU * j as f64 / m as f64;
            wr.write_record(&[format!("{t:.17e}"), format!("{:.17e}", self.theta[j]), format!("{:.17e}", self.boundary_speed[j])])?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn disc_field(spec: GridSpec, f: impl Fn(C64) -> C64) -> GridField {
    let vals = (0..spec.len())
        .map(|i| {
            let z = spec.point_at(i);
            if z.norm() < 1.0 {
                f(z)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    GridField::from_values(spec, vals).expect("finite disc field")
}

/// θ(s) = s + P(s) with P the interpolant of θ_j − t_j.
struct Correspondence {
    coeffs: Vec<C64>,
}

impl Correspondence {
    fn new(theta: &[f64]) -> Result<Self> {
        let m = theta.len();
        let p: Vec<f64> = theta.iter().enumerate().map(|(j, &v)| v - TAU * j as f64 / m as f64).collect();
        Ok(Self {
            coeffs: CircleFunction::from_real(&p)?.coefficients(),
        })
    }

    fn eval(&self, s: f64) -> f64 {
        s + eval_coeffs(&self.coeffs, s).re
    }

    fn slope(&self, s: f64) -> f64 {
        let m = self.coeffs.len();
        let mut d = 1.0;
        for (i, &v) in self.coeffs.iter().enumerate() {
            if i == m / 2 {
                continue;
            }
            let k = signed_index(i, m) as f64;
            d += (v * C64::new(0.0, k) * C64::from_polar(1.0, k * s)).re;
        }
        d
    }
}

/// Compose θ with the disc automorphism sending 0 to φ^{-1}(center) and 1 to θ^{-1}(0).
fn pin(theta: &[f64], w: &BoundaryCurve, center: C64) -> Result<Vec<f64>> {
    let m = theta.len();
    let b = CircleFunction::new(theta.iter().map(|&th| w.eval(th)).collect())?;
    let c = b.coefficients();
    let taylor: Vec<C64> = c[..m / 2].to_vec();
    let mut a = C64::new(0.0, 0.0);
    for _ in 0..60 {
        let d = (horner(&taylor, a) - center) / horner_derivative(&taylor, a);
        a -= d;
        if a.norm() >= 0.95 {
            return Err(invalid("map centre left the disc while pinning"));
        }
        if d.norm() < 1e-15 {
            break;
        }
    }
    let corr = Correspondence::new(theta)?;
    let mut sigma = -theta[0];
    for _ in 0..60 {
        let d = corr.eval(sigma) / corr.slope(sigma);
        sigma -= d;
        if d.abs() < 1e-15 {
            break;
        }
    }
    let es = C64::from_polar(1.0, sigma);
    let rot = (es - a) / (1.0 - a.conj() * es);
    let mob = |z: C64| (rot * z + a) / (1.0 + a.conj() * rot * z);
    let raw: Vec<f64> = (0..m).map(|j| mob(C64::from_polar(1.0, TAU * j as f64 / m as f64)).arg()).collect();
    let mut u = unwrap_phase(&raw);
    let shift = u[0] - sigma;
    u.iter_mut().for_each(|v| *v -= shift);
    Ok(u.into_iter().map(|s| corr.eval(s)).collect())
}

/// Boundary values of (i/2π)A(γ) on the ring r = 1 − 2^{−j}, j = log₂M + 20.
fn boundary_a_tilde(gamma: &CircleFunction) -> Vec<C64> {
    let m = gamma.len();
    let r = 1.0 - 2f64.powi(-(m.trailing_zeros() as i32 + 20));
    let c = gamma.coefficients();
    let i = C64::new(0.0, 1.0);
    let mut spec = vec![C64::new(0.0, 0.0); m];
    spec[0] = i * c[0];
    for n in 1..m / 2 {
        spec[n] = 2.0 * i * c[n] * r.powi(n as i32);
    }
    spec[m / 2] = i * c[m / 2] * r.powi((m / 2) as i32);
    fft1(&mut spec, true);
    spec.iter().map(|v| v * m as f64).collect()
}

/// θ_new(t) = t + ∫_0^t (q/q̄ − 1) spectrally.
fn cumulative_speed(speed: &[f64]) -> Vec<f64> {
    let m = speed.len();
    let mut c: Vec<C64> = speed.iter().map(|&s| C64::new(s, 0.0)).collect();
    fft1(&mut c, false);
    let mean = c[0].re / m as f64;
    c[0] = C64::new(0.0, 0.0);
    c[m / 2] = C64::new(0.0, 0.0);
    for (k, v) in c.iter_mut().enumerate().skip(1) {
        if k != m / 2 {
            *v /= C64::new(0.0, signed_index(k, m) as f64) * mean;
        }
    }
    let mut prim = c.clone();
    fft1(&mut prim, true);
    let p0 = prim[0].re;
    (0..m).map(|j| TAU * j as f64 / m as f64 + prim[j].re - p0).collect()
}

/// One sweep from θ: returns (γ, boundary Ã without scale, boundary speed, θ_new).
fn sweep(argw: &CircleFunction, theta: &[f64]) -> Result<(CircleFunction, Vec<f64>, Vec<f64>, f64)> {
    let gamma = kellogg_gamma(argw, theta)?;
    let at = boundary_a_tilde(&gamma);
    let speed: Vec<f64> = at.iter().map(|v| v.re.exp()).collect();
    let new = cumulative_speed(&speed);
    let mean = speed.iter().sum::<f64>() / speed.len() as f64;
    Ok((gamma, speed, new, mean))
}

/// Damped fixed point for the boundary correspondence of the Riemann map of
/// the domain bounded by `curve`. The curve is arc-length reparameterized first.
pub fn riemann_map_fixed_point(curve: &BoundaryCurve, opts: &RiemannOptions) -> Result<RiemannMapResult> {
    let m = curve.len();
    if !m.is_power_of_two() {
        return Err(invalid("curve node count must be a power of two"));
    }
    if !curve.is_smooth() {
        return Err(invalid("the fixed point needs a smooth curve"));
    }
    let (w, _) = curve.arc_length_reparameterize()?;
    let length = w.length();
    let center = opts.center.unwrap_or_else(|| curve.centroid());
    let argw = arg_derivative(&w)?;
    let mut theta: Vec<f64> = (0..m).map(|j| TAU * j as f64 / m as f64).collect();
    let mut lambda = opts.lambda;
    let mut halvings = 0;
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        if iterations >= opts.max_iter {
            return Err(QcError::Diverged {
                iterations,
                last_change: history.last().copied().unwrap_or(f64::NAN),
                history,
            });
        }
        iterations += 1;
        let (_, _, new, _) = sweep(&argw, &theta)?;
        let cand = check_monotone(&new).and_then(|_| pin(&new, &w, center));
        let step = cand.and_then(|cand| {
            let change = cand.iter().zip(&theta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let mixed: Vec<f64> = theta.iter().zip(&cand).map(|(a, b)| (1.0 - lambda) * a + lambda * b).collect();
            check_monotone(&mixed)?;
            Ok((change, pin(&mixed, &w, center)?))
        });
        match step {
            Ok((change, next)) => {
                history.push(change);
                if change < opts.tol {
                    break;
                }
                theta = next;
            }
            Err(QcError::NonMonotone) if halvings < 3 => {
                halvings += 1;
                lambda *= 0.5;
            }
            Err(e) => return Err(e),
        }
    }
    let (gamma, speed, _, mean) = sweep(&argw, &theta)?;
    let scale = length / TAU / mean;
    let boundary_speed: Vec<f64> = speed.iter().map(|s| s * scale).collect();
    let mut taylor: Vec<C64> = schwarz_taylor(&gamma).iter().map(|&a| a * C64::new(0.0, 1.0 / TAU)).collect();
    taylor[0] += scale.ln();
    let spec = GridSpec::new(opts.grid, 1.0)?;
    let a_tilde = disc_field(spec, |z| horner(&taylor, z));
    let disc = RegionMask::from_fn(spec, |z| z.norm() < 1.0);
    let dphi = disc_field(spec, |z| horner(&taylor, z).exp());
    let min_abs_dphi = (0..spec.len())
        .filter(|&i| disc.bits()[i])
        .map(|i| dphi.values()[i].norm())
        .fold(f64::INFINITY, f64::min);
    Ok(RiemannMapResult {
        residual: history.last().copied().unwrap_or(0.0),
        theta,
        gamma,
        boundary_speed,
        a_tilde,
        dphi,
        disc,
        iterations,
        min_abs_dphi,
        lambda,
        history,
        taylor,
    })
}

/// Seminorms of a computed Riemann map at one grid size.
#[derive(Clone, Debug)]
pub struct RiemannNormLevel {
    pub grid: usize,
    pub tl: NormEstimate,
    pub weighted: NormEstimate,
}

/// Finest level first.
#[derive(Clone, Debug)]
pub struct RiemannNormReport {
    pub levels: Vec<RiemannNormLevel>,
}

impl RiemannNormReport {
    pub fn tl(&self) -> &NormEstimate {
        &self.levels[0].tl
    }

    pub fn weighted(&self) -> &NormEstimate {
        &self.levels[0].weighted
    }

    /// Ratio of the finest to the next level for (tl, weighted).
    pub fn refinement_ratios(&self) -> Option<(f64, f64)> {
        let (a, b) = (self.levels.first()?, self.levels.get(1)?);
        Some((a.tl.value / b.tl.value, a.weighted.value / b.weighted.value))
    }
}

/// F^s_{p,q} seminorm of φ' on the disc and ‖δ^{1−σ}Ã'‖_{L^p}, σ = min(s, 1),
/// at the result grid and the two coarser grids.
pub fn riemann_norm_report(result: &RiemannMapResult, s: f64, p: f64, q: f64) -> Result<RiemannNormReport> {
    let fine = result.a_tilde.spec().n();
    let sigma = s.min(1.0);
    let mut levels = Vec::new();
    for l in 0..3 {
        let n = fine >> l;
        if n < 32 {
            break;
        }
        let spec = GridSpec::new(n, 1.0)?;
        let disc = RegionMask::from_fn(spec, |z| z.norm() < 1.0);
        let dphi = disc_field(spec, |z| horner(&result.taylor, z).exp());
        let dat = disc_field(spec, |z| horner_derivative(&result.taylor, z));
        let delta: Vec<f64> = (0..spec.len()).map(|i| (1.0 - spec.point_at(i).norm()).max(0.0)).collect();
        let tl = tl_seminorm_local(&dphi, &disc, TlParams::new(s, p, q, 0.5), Some(&delta))?;
        let weighted = weighted_derivative_norm(&dat, sigma, p)?;
        levels.push(RiemannNormLevel { grid: n, tl, weighted });
    }
    Ok(RiemannNormReport { levels })
}

/// (‖δ^{1−σ}A(g)'‖_{L^p(D)}, ‖g‖_{Ḟ^{σ−1/p}_{p,p}(T)}) with A(g)' sampled on an n-grid.
pub fn weighted_bound_audit(g: &CircleFunction, sigma: f64, p: f64, n: usize) -> Result<(f64, f64)> {
    if sigma * p <= 1.0 {
        return Err(invalid("the weighted bound needs p > 1/σ"));
    }
    let spec = GridSpec::new(n, 1.0)?;
    let a = schwarz_taylor(g);
    let d = disc_field(spec, |z| horner_derivative(&a, z));
    let lhs = weighted_derivative_norm(&d, sigma, p)?.value;
    let rhs = periodic_besov_seminorm(g.values(), sigma - 1.0 / p, p)?;
    Ok((lhs, rhs))
}
