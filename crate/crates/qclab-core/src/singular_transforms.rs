//! Beurling and Cauchy transforms as Fourier multipliers, their truncations
//! to a domain, commutators and reflections, and the boundary-integral
//! kernels h_m, H^j_m, K_m with the Taylor-remainder expansion of K_m.
//!
//! Normalization: with ξ = ξ₁ + iξ₂ the multipliers are
//! ∂̄ ↦ (i/2)ξ, ∂ ↦ (i/2)ξ̄, C ↦ −2i/ξ and B = ∂C ↦ ξ̄/ξ. These correspond to
//! Cf = (1/π)∫ f(w)/(z−w) dm(w) and Bf = −(1/π) p.v.∫ f(w)/(z−w)² dm(w), so
//! Cχ_D = z̄ and Bχ_D = 0 inside the unit disc, 1/z and −1/z² outside.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::domain_geometry::{BoundaryCurve, ContourNode};
use crate::error::{invalid, QcError, Result};
use crate::grid_field::{same_grid, GridField, RegionMask};
use crate::linalg::{condition_number, least_squares};
use crate::quadrature::gauss_legendre_on;
use crate::C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Which multiplier an operator applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransformKind {
    Beurling,
    BeurlingAdjoint,
    /// B^m; negative powers are powers of the adjoint.
    BeurlingPower(i32),
    Cauchy,
    D,
    Dbar,
}

/// A Fourier multiplier on the periodic grid. The DC symbol is 0 for every kind.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiplierOp {
    pub kind: TransformKind,
    pub name: String,
}

impl MultiplierOp {
    pub fn new(kind: TransformKind) -> Self {
        let name = match kind {
            TransformKind::Beurling => "B".to_string(),
            TransformKind::BeurlingAdjoint => "B*".to_string(),
            TransformKind::BeurlingPower(m) => format!("B^{m}"),
            TransformKind::Cauchy => "C".to_string(),
            TransformKind::D => "d".to_string(),
            TransformKind::Dbar => "dbar".to_string(),
        };
        Self { kind, name }
    }

    pub fn beurling() -> Self {
        Self::new(TransformKind::Beurling)
    }

    pub fn beurling_power(m: i32) -> Self {
        Self::new(TransformKind::BeurlingPower(m))
    }

    pub fn cauchy() -> Self {
        Self::new(TransformKind::Cauchy)
    }

    pub fn symbol(&self, x1: f64, x2: f64) -> C64 {
        if x1 == 0.0 && x2 == 0.0 {
            return ZERO;
        }
        let xi = C64::new(x1, x2);
        let half_i = C64::new(0.0, 0.5);
        match self.kind {
            TransformKind::Beurling => xi.conj() / xi,
            TransformKind::BeurlingAdjoint => xi / xi.conj(),
            TransformKind::BeurlingPower(m) => {
                let u = xi.conj() / xi;
                let u = u / u.norm();
                if m >= 0 {
                    u.powu(m as u32)
                } else {
                    u.conj().powu((-m) as u32)
                }
            }
            TransformKind::Cauchy => C64::new(0.0, -2.0) / xi,
            TransformKind::D => half_i * xi.conj(),
            TransformKind::Dbar => half_i * xi,
        }
    }

    pub fn apply(&self, f: &GridField) -> GridField {
        f.apply_symbol(|a, b| self.symbol(a, b))
    }
}

pub fn beurling(f: &GridField) -> GridField {
    MultiplierOp::beurling().apply(f)
}

pub fn beurling_adjoint(f: &GridField) -> GridField {
    MultiplierOp::new(TransformKind::BeurlingAdjoint).apply(f)
}

/// B^m f (m < 0 applies (B*)^{|m|}).
pub fn beurling_power(f: &GridField, m: i32) -> GridField {
    if m == 0 {
        return f.clone();
    }
    MultiplierOp::beurling_power(m).apply(f)
}

/// Periodic Cauchy transform (inverts ∂̄ on mean-zero fields).
pub fn cauchy(f: &GridField) -> GridField {
    MultiplierOp::cauchy().apply(f)
}

const PSI_S2: f64 = 0.25;

fn psi(z: C64) -> f64 {
    (-z.norm_sqr() / PSI_S2).exp()
}

/// C ψ for ψ = e^{−|z|²/s²}: s²(1 − e^{−|z|²/s²})/z.
fn cauchy_psi(z: C64) -> C64 {
    let r2 = z.norm_sqr();
    if r2 == 0.0 {
        return ZERO;
    }
    let q = r2 / PSI_S2;
    -PSI_S2 * (-q).exp_m1() / z
}

/// B ψ = (z̄/z)[e^{−q} − (1 − e^{−q})/q], q = |z|²/s².
fn beurling_psi(z: C64) -> C64 {
    let r2 = z.norm_sqr();
    if r2 == 0.0 {
        return ZERO;
    }
    let q = r2 / PSI_S2;
    let bracket = if q < 1e-4 {
        -q / 2.0 + q * q / 3.0 - q * q * q / 8.0
    } else {
        (-q).exp() + (-q).exp_m1() / q
    };
    z.conj() / z * bracket
}

/// Planar transform of compactly supported data: the mass is carried by a
/// Gaussian whose transform is known in closed form, the mean-zero
/// remainder is transformed on the doubled box and cropped back.
fn planar(f: &GridField, kind: TransformKind, exact: fn(C64) -> C64) -> GridField {
    let spec = *f.spec();
    let psi_field = GridField::from_raw(
        spec,
        (0..spec.len()).map(|i| C64::new(psi(spec.point_at(i)), 0.0)).collect(),
    );
    let mass: C64 = f.values().iter().sum();
    let psi_mass: f64 = psi_field.values().iter().map(|v| v.re).sum();
    let m = mass / psi_mass;
    let rest = f.sub(&psi_field.scale(m)).expect("same grid");
    let big = MultiplierOp::new(kind).apply(&rest.zero_padded());
    let t = big.cropped_to(spec).expect("doubled grid");
    t.map_with_point(|z, v| v + m * exact(z))
}

/// Cauchy transform of compactly supported data approximating the planar
/// operator (no DC ambiguity: the result decays like the true transform).
pub fn cauchy_planar(f: &GridField) -> GridField {
    planar(f, TransformKind::Cauchy, cauchy_psi)
}

/// Beurling transform of compactly supported data approximating the planar operator.
pub fn beurling_planar(f: &GridField) -> GridField {
    planar(f, TransformKind::Beurling, beurling_psi)
}

/// χ_out · op(χ_in · f).
pub fn truncated_apply(
    op: &MultiplierOp,
    f: &GridField,
    inside: &RegionMask,
    outside_output: &RegionMask,
) -> Result<GridField> {
    same_grid(f.spec(), inside.spec())?;
    same_grid(f.spec(), outside_output.spec())?;
    op.apply(&f.masked(inside)?).masked(outside_output)
}

/// B_Ω f = χ_Ω B(χ_Ω f).
pub fn beurling_truncated(f: &GridField, omega: &RegionMask) -> Result<GridField> {
    truncated_apply(&MultiplierOp::beurling(), f, omega, omega)
}

/// [μ, B_Ω] f = μ B_Ω f − B_Ω(μ f).
pub fn commutator(mu: &GridField, f: &GridField, omega: &RegionMask) -> Result<GridField> {
    same_grid(mu.spec(), f.spec())?;
    let a = mu.mul(&beurling_truncated(f, omega)?)?;
    let b = beurling_truncated(&mu.mul(f)?, omega)?;
    a.sub(&b)
}

/// R_m f = χ_Ω B(χ_{Ω^c} B^m(χ_Ω f)).
pub fn reflection_rm(f: &GridField, m: i32, omega: &RegionMask) -> Result<GridField> {
    if m < 1 {
        return Err(invalid(format!("reflection order must be ≥ 1, got {m}")));
    }
    same_grid(f.spec(), omega.spec())?;
    let inner = beurling_power(&f.masked(omega)?, m).masked(&omega.complement())?;
    beurling(&inner).masked(omega)
}

/// R_m with a smooth cutoff χ standing in for the indicator (χ^c = 1 − χ).
pub fn reflection_rm_weighted(f: &GridField, m: i32, chi: &GridField) -> Result<GridField> {
    if m < 1 {
        return Err(invalid(format!("reflection order must be ≥ 1, got {m}")));
    }
    let inner = beurling_power(&f.mul(chi)?, m);
    let outer = inner.zip_with(chi, |v, c| v * (1.0 - c))?;
    beurling(&outer).mul(chi)
}

/// I(z; p, q) = ∮ (τ̄ − z̄)^p / (τ − z)^q dτ on the given nodes.
pub fn contour_moment(nodes: &[ContourNode], z: C64, p: u32, q: u32) -> C64 {
    nodes
        .iter()
        .map(|n| {
            let d = n.point - z;
            d.conj().powu(p) / d.powu(q) * n.weight
        })
        .sum()
}

fn nodes_spacing(nodes: &[ContourNode]) -> f64 {
    let n = nodes.len();
    (0..n)
        .map(|k| (nodes[(k + 1) % n].point - nodes[k].point).norm())
        .fold(0.0, f64::max)
}

fn nearest_node(nodes: &[ContourNode], z: C64) -> f64 {
    nodes.iter().map(|n| (n.point - z).norm()).fold(f64::INFINITY, f64::min)
}

/// Values of h_m(z) = ∮ (τ̄−z̄)^m/(τ−z) dτ.
#[derive(Clone, Debug, PartialEq)]
pub struct AuxValues {
    pub values: Vec<C64>,
    pub nodes: usize,
    /// Points closer than two node spacings to the curve.
    pub near_boundary: Vec<bool>,
}

pub fn aux_h_m(points: &[C64], m: u32, curve: &BoundaryCurve, nodes: usize) -> AuxValues {
    let nd = curve.contour_nodes(nodes);
    let sp = nodes_spacing(&nd);
    AuxValues {
        values: points.iter().map(|&z| contour_moment(&nd, z, m, 1)).collect(),
        nodes: nd.len(),
        near_boundary: points.iter().map(|&z| nearest_node(&nd, z) < 2.0 * sp).collect(),
    }
}

/// ∂^a ∂̄^b H^j_m(z) with H^j_m = ∂^j h_m, by differentiating under the integral:
/// (j+a)!·(−1)^b·m!/(m−b)!·I(z; m−b, j+a+1).
pub fn aux_derivative(nodes: &[ContourNode], z: C64, m: u32, j: u32, a: u32, b: u32) -> C64 {
    if b > m {
        return ZERO;
    }
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    let c = fact(j + a) * fact(m) / fact(m - b) * if b % 2 == 0 { 1.0 } else { -1.0 };
    contour_moment(nodes, z, m - b, j + a + 1) * c
}

/// Bχ_Ω(z) = −(1/2πi) I(z; 1, 2) for z ∈ Ω.
pub fn beurling_chi_contour(nodes: &[ContourNode], z: C64) -> C64 {
    -contour_moment(nodes, z, 1, 2) / C64::new(0.0, 2.0 * PI)
}

/// ∂Bχ_Ω(z) = −(1/πi) I(z; 1, 3) for z ∈ Ω.
pub fn d_beurling_chi_contour(nodes: &[ContourNode], z: C64) -> C64 {
    -contour_moment(nodes, z, 1, 3) / C64::new(0.0, PI)
}

/// One accepted contour evaluation of K_m.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelEvaluation {
    pub z: C64,
    pub xi: C64,
    pub m: u32,
    pub value: C64,
    pub quadrature_nodes: usize,
}

fn km_sum(nodes: &[ContourNode], z: C64, xi: C64, m: u32) -> C64 {
    nodes
        .iter()
        .map(|n| {
            let w = n.point;
            (w - xi).conj().powu(m) / ((z - w).powu(3) * (w - xi).powu(m + 1)) * n.weight
        })
        .sum()
}

/// K_m(z, ξ) = ∮ (w̄−ξ̄)^m / ((z−w)³ (w−ξ)^{m+1}) dw, doubling the node count
/// until two successive values agree to 1e-8 relative.
pub fn kernel_km(z: C64, xi: C64, m: u32, curve: &BoundaryCurve) -> Result<KernelEvaluation> {
    if m < 1 {
        return Err(invalid("kernel order m must be ≥ 1"));
    }
    let base = curve.len().max(256);
    let nd = curve.contour_nodes(base);
    let sp = nodes_spacing(&nd);
    if nearest_node(&nd, z).min(nearest_node(&nd, xi)) < 5.0 * sp {
        return Err(QcError::NearContour(format!("point within 5 node spacings of the curve ({sp:.3e})")));
    }
    if (z - xi).norm() < 5.0 * sp {
        return Err(QcError::NearContour("z and ξ closer than 5 node spacings".into()));
    }
    let mut count = base;
    let mut prev = km_sum(&nd, z, xi, m);
    while count < 1 << 18 {
        count *= 2;
        let v = km_sum(&curve.contour_nodes(count), z, xi, m);
        if (v - prev).norm() <= 1e-8 * v.norm().max(1e-6) {
            return Ok(KernelEvaluation {
                z,
                xi,
                m,
                value: v,
                quadrature_nodes: count,
            });
        }
        prev = v;
    }
    Err(QcError::Unresolved(format!("K_{m} did not settle under node doubling")))
}

/// P(ξ) = Σ_{a+b≤j} D^{(a,b)}f(z)/(a! b!) (ξ−z)^a (ξ̄−z̄)^b, with D^{(a,b)} = ∂^a ∂̄^b.
#[derive(Clone, Debug, PartialEq)]
pub struct TaylorPolynomial {
    pub center: C64,
    pub degree: u32,
    terms: Vec<((u32, u32), C64)>,
}

impl TaylorPolynomial {
    pub fn eval(&self, xi: C64) -> C64 {
        let d = xi - self.center;
        self.terms
            .iter()
            .map(|&((a, b), c)| c * d.powu(a) * d.conj().powu(b))
            .sum()
    }
}

pub fn taylor_polynomial(derivs: &HashMap<(u32, u32), C64>, z: C64, degree: u32) -> Result<TaylorPolynomial> {
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    let mut terms = Vec::new();
    for total in 0..=degree {
        for a in 0..=total {
            let b = total - a;
            let v = derivs
                .get(&(a, b))
                .ok_or_else(|| invalid(format!("missing derivative ∂^{a}∂̄^{b}")))?;
            terms.push(((a, b), v / (fact(a) * fact(b))));
        }
    }
    Ok(TaylorPolynomial {
        center: z,
        degree,
        terms,
    })
}

/// Supplies the pieces of the kernel expansion at interior points.
pub trait HDerivativeOracle {
    /// ∂^a ∂̄^b H^j_m(z).
    fn h_derivative(&self, z: C64, m: u32, j: u32, a: u32, b: u32) -> C64;
    /// ∂Bχ_Ω(z).
    fn d_beurling_chi(&self, z: C64) -> C64;
    /// Size of the integrals that cancel in the two quantities above, used to
    /// detect terms that vanish identically.
    fn gross_scale(&self, z: C64) -> f64;
}

/// Exact-in-the-limit oracle: every derivative is a contour moment.
#[derive(Clone, Debug)]
pub struct ContourOracle {
    nodes: Vec<ContourNode>,
}

impl ContourOracle {
    pub fn new(curve: &BoundaryCurve, nodes: usize) -> Self {
        Self {
            nodes: curve.contour_nodes(nodes),
        }
    }

    pub fn nodes(&self) -> &[ContourNode] {
        &self.nodes
    }
}

impl HDerivativeOracle for ContourOracle {
    fn h_derivative(&self, z: C64, m: u32, j: u32, a: u32, b: u32) -> C64 {
        aux_derivative(&self.nodes, z, m, j, a, b)
    }

    fn d_beurling_chi(&self, z: C64) -> C64 {
        d_beurling_chi_contour(&self.nodes, z)
    }

    fn gross_scale(&self, z: C64) -> f64 {
        self.nodes
            .iter()
            .map(|n| n.weight.norm() / (n.point - z).norm_sqr())
            .sum()
    }
}

/// Regressors of the expansion for one pair: the ∂Bχ_Ω term followed by
/// the Taylor remainders for j = 0..=m.
pub fn kernel_features(oracle: &dyn HDerivativeOracle, z: C64, xi: C64, m: u32) -> Result<Vec<C64>> {
    let d = xi - z;
    let mut out = Vec::with_capacity(m as usize + 2);
    out.push(oracle.d_beurling_chi(z) * d.conj().powu(m - 1) / d.powu(m + 1));
    for j in 0..=m {
        let deg = m - j;
        let mut derivs = HashMap::new();
        for total in 0..=deg {
            for a in 0..=total {
                derivs.insert((a, total - a), oracle.h_derivative(z, m, j, a, total - a));
            }
        }
        let p = taylor_polynomial(&derivs, z, deg)?;
        let h = oracle.h_derivative(xi, m, j, 0, 0);
        out.push((h - p.eval(xi)) / d.powu(m + 3 - j));
    }
    Ok(out)
}

/// Constants c_m, c_{m,0..m} fitted by least squares and then frozen.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelIdentityFit {
    pub m: u32,
    /// c_m followed by c_{m,0}, …, c_{m,m}.
    pub constants: Vec<C64>,
    pub condition: f64,
    pub fit_residual: f64,
}

/// Closed-form constants for this module's normalization: c_m = mπi and
/// c_{m,j} = (−1)^{m+3−j} binom(m+2−j, 2)/j!.
pub fn kernel_constants_closed_form(m: u32) -> Vec<C64> {
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    let mut out = vec![C64::new(0.0, m as f64 * PI)];
    for j in 0..=m {
        let k = (m + 2 - j) as f64;
        let sign = if (m + 3 - j) % 2 == 0 { 1.0 } else { -1.0 };
        out.push(C64::new(sign * k * (k - 1.0) / 2.0 / fact(j), 0.0));
    }
    out
}

fn relative_residual(a: &DMatrix<C64>, x: &DVector<C64>, b: &DVector<C64>) -> f64 {
    (a * x - b).norm() / b.norm()
}

/// Fit the constants on the given (z, ξ) pairs. A term that vanishes
/// identically on the domain (as on a disc) or a condition number above 1e8
/// is reported as ill-conditioned.
pub fn fit_kernel_identity(
    curve: &BoundaryCurve,
    oracle: &dyn HDerivativeOracle,
    m: u32,
    pairs: &[(C64, C64)],
) -> Result<KernelIdentityFit> {
    let ncol = m as usize + 2;
    if pairs.len() < ncol {
        return Err(invalid("not enough pairs for the fit"));
    }
    let mut a = DMatrix::<C64>::zeros(pairs.len(), ncol);
    let mut b = DVector::<C64>::zeros(pairs.len());
    let mut gross: f64 = 0.0;
    for (r, &(z, xi)) in pairs.iter().enumerate() {
        let f = kernel_features(oracle, z, xi, m)?;
        for (c, v) in f.into_iter().enumerate() {
            a[(r, c)] = v;
        }
        b[r] = kernel_km(z, xi, m, curve)?.value;
        let d = (xi - z).norm();
        gross = gross.max(oracle.gross_scale(z).max(oracle.gross_scale(xi)) / d.powi(m as i32 + 3));
    }
    for c in 0..ncol {
        let col_max = a.column(c).iter().map(|v| v.norm()).fold(0.0, f64::max);
        if col_max <= 1e-9 * gross {
            return Err(QcError::IllConditioned(f64::INFINITY));
        }
    }
    let mut scaled = a.clone();
    let norms: Vec<f64> = (0..ncol).map(|c| a.column(c).norm()).collect();
    for c in 0..ncol {
        scaled.column_mut(c).unscale_mut(norms[c]);
    }
    let cond = condition_number(&scaled);
    if cond > 1e8 {
        return Err(QcError::IllConditioned(cond));
    }
    let (y, _) = least_squares(&scaled, &b)?;
    let x = DVector::from_iterator(ncol, (0..ncol).map(|c| y[c] / norms[c]));
    Ok(KernelIdentityFit {
        m,
        constants: x.iter().copied().collect(),
        condition: cond,
        fit_residual: relative_residual(&a, &x, &b),
    })
}

/// Relative residual ‖K − RHS‖/‖K‖ of the frozen fit over fresh pairs.
pub fn verify_kernel_identity(
    fit: &KernelIdentityFit,
    curve: &BoundaryCurve,
    oracle: &dyn HDerivativeOracle,
    pairs: &[(C64, C64)],
) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for &(z, xi) in pairs {
        let f = kernel_features(oracle, z, xi, fit.m)?;
        let rhs: C64 = f.iter().zip(&fit.constants).map(|(a, c)| a * c).sum();
        let k = kernel_km(z, xi, fit.m, curve)?.value;
        num += (k - rhs).norm_sqr();
        den += k.norm_sqr();
    }
    Ok((num / den).sqrt())
}

/// ∫_{−R}^{R} (w − ȳ)^{m3+1} / ((x − w)^{m1} (w − y)^{m2}) dw along the real
/// axis, the boundary of the upper half-plane Π ∋ x, y.
pub fn half_plane_line_integral(x: C64, y: C64, m1: u32, m2: u32, m3: u32, half_length: f64) -> C64 {
    let g = |w: f64| {
        let w = C64::new(w, 0.0);
        (w - y.conj()).powu(m3 + 1) / ((x - w).powu(m1) * (w - y).powu(m2))
    };
    let mut panels = Vec::new();
    let core = 4.0f64.min(half_length);
    let k = 64;
    for i in 0..k {
        let a = -core + 2.0 * core * i as f64 / k as f64;
        panels.push((a, a + 2.0 * core / k as f64));
    }
    let mut a = core;
    while a < half_length {
        let b = (2.0 * a).min(half_length);
        panels.push((a, b));
        panels.push((-b, -a));
        a = b;
    }
    let mut s = ZERO;
    for (lo, hi) in panels {
        let (nodes, w) = gauss_legendre_on(24, lo, hi);
        for (t, wt) in nodes.iter().zip(&w) {
            s += g(*t) * *wt;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_field::{lp_norm, sample, wirtinger_derivative, GridSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn bump(spec: GridSpec, rng: &mut ChaCha8Rng) -> GridField {
        let z0 = C64::new(rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4));
        let a = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let k = C64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        sample(spec, |z| {
            let r2 = (z - z0).norm_sqr();
            a * (k * (z - z0)).sin() * (-r2 / 0.08).exp()
        })
        .unwrap()
    }

    #[test]
    fn plane_wave_unimodular() {
        let s = GridSpec::new(32, 1.0).unwrap();
        let (x1, x2) = (PI * 3.0, PI * -2.0);
        let f = sample(s, |z| C64::new(0.0, x1 * z.re + x2 * z.im).exp()).unwrap();
        let g = beurling(&f);
        let lam = g.value(5, 7) / f.value(5, 7);
        assert!((lam.norm() - 1.0).abs() < 1e-12);
        for (a, b) in g.values().iter().zip(f.values()) {
            assert!((a - lam * b).norm() < 1e-12);
        }
    }

    #[test]
    fn isometry_on_mean_zero() {
        let s = GridSpec::new(64, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = GridField::from_values(
            s,
            (0..s.len()).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect(),
        )
        .unwrap();
        let m = f.mean();
        let f = f.map(|v| v - m);
        let full = RegionMask::full(s);
        let a = lp_norm(&f, 2.0, &full).unwrap();
        let b = lp_norm(&beurling(&f), 2.0, &full).unwrap();
        assert!((a - b).abs() <= 1e-12 * a);
        let bb = beurling(&beurling(&f));
        let b2 = beurling_power(&f, 2);
        assert!(bb.sub(&b2).unwrap().max_abs() < 1e-12);
        let back = beurling_adjoint(&beurling(&f));
        assert!(back.sub(&f).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn cauchy_identities_on_smooth_bumps() {
        let s = GridSpec::new(128, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let full = RegionMask::full(s);
        for _ in 0..3 {
            let f = bump(s, &mut rng);
            let m = f.mean();
            let f = f.map(|v| v - m);
            let cf = cauchy(&f);
            let e1 = wirtinger_derivative(&cf, (0, 1)).sub(&f).unwrap();
            let e2 = wirtinger_derivative(&cf, (1, 0)).sub(&beurling(&f)).unwrap();
            let n = lp_norm(&f, 2.0, &full).unwrap();
            assert!(lp_norm(&e1, 2.0, &full).unwrap() <= 1e-10 * n);
            assert!(lp_norm(&e2, 2.0, &full).unwrap() <= 1e-10 * n);
        }
        let z = GridField::zeros(s);
        assert_eq!(cauchy(&z).max_abs(), 0.0);
    }

    #[test]
    fn gaussian_closed_forms_invert_dbar() {
        let s = GridSpec::new(256, 3.0).unwrap();
        let cpsi = sample(s, cauchy_psi).unwrap();
        let bpsi = sample(s, beurling_psi).unwrap();
        let inner = RegionMask::disc(s, c(0.0), 2.0);
        let window = crate::grid_field::window(s, 1.8, 0.1);
        let d = wirtinger_derivative(&cpsi.mul(&window).unwrap(), (0, 1));
        let e = d.map_with_point(|z, v| v - psi(z));
        assert!(lp_norm(&e, f64::INFINITY, &RegionMask::disc(s, c(0.0), 1.2)).unwrap() < 1e-6);
        let d = wirtinger_derivative(&cpsi.mul(&window).unwrap(), (1, 0));
        let e = d.sub(&bpsi).unwrap();
        assert!(lp_norm(&e, f64::INFINITY, &RegionMask::disc(s, c(0.0), 1.2)).unwrap() < 1e-6);
        let _ = inner;
    }

    #[test]
    fn cauchy_of_disc_indicator() {
        let s = GridSpec::new(256, 4.0).unwrap();
        let chi = RegionMask::disc(s, c(0.0), 1.0).indicator();
        let cf = cauchy_planar(&chi);
        let inner = RegionMask::disc(s, c(0.0), 0.9);
        let err = cf.map_with_point(|z, v| v - z.conj());
        assert!(lp_norm(&err, f64::INFINITY, &inner).unwrap() < 0.02 * 0.9);
        // periodic version agrees after constant alignment
        let cp = cauchy(&chi);
        let shift = cp.sub(&cf).unwrap().masked(&inner).unwrap();
        let mean = shift.values().iter().sum::<C64>() / inner.count() as f64;
        let dev = shift.map(|v| v - mean).masked(&inner).unwrap().max_abs();
        assert!(dev < 0.05, "{dev}");
    }

    #[test]
    fn beurling_of_disc_indicator_planar() {
        let s = GridSpec::new(512, 4.0).unwrap();
        let disc = crate::domain_geometry::JordanDomain::new(
            BoundaryCurve::circle(c(0.0), 1.0, 1024).unwrap(),
        );
        let chi = disc.smoothed_indicator(s);
        let b = beurling_planar(&chi);
        let inner = RegionMask::disc(s, c(0.0), 0.9);
        assert!(lp_norm(&b, f64::INFINITY, &inner).unwrap() <= 0.02);
        let ring = RegionMask::from_fn(s, |z| z.norm() > 1.1 && z.norm() < 1.8);
        let rel = b
            .map_with_point(|z, v| (v + 1.0 / (z * z)) * z * z)
            .masked(&ring)
            .unwrap()
            .max_abs();
        assert!(rel <= 0.02, "{rel}");
    }

    #[test]
    fn half_plane_output_is_constant_per_side() {
        let s = GridSpec::new(128, 2.0).unwrap();
        // tilted periodic strip 0.5 < (x + y) mod 4 < 2.5 with smooth edges
        let f = sample(s, |z| {
            let u = (z.re + z.im).rem_euclid(4.0);
            c(crate::grid_field::smooth_step((0.5 - u) / 0.2) * crate::grid_field::smooth_step((u - 2.5) / 0.2))
        })
        .unwrap();
        let b = beurling(&f);
        let side_a = RegionMask::from_fn(s, |z| {
            let u = (z.re + z.im).rem_euclid(4.0);
            u > 1.0 && u < 2.0
        });
        let side_b = RegionMask::from_fn(s, |z| {
            let u = (z.re + z.im).rem_euclid(4.0);
            u > 3.0
        });
        let mean = |m: &RegionMask| b.masked(m).unwrap().values().iter().sum::<C64>() / m.count() as f64;
        let (ma, mb) = (mean(&side_a), mean(&side_b));
        let gap = (ma - mb).norm();
        assert!((gap - 1.0).abs() < 1e-10);
        for (m, mu) in [(&side_a, ma), (&side_b, mb)] {
            let dev = b.map(|v| v - mu).masked(m).unwrap().max_abs();
            assert!(dev <= 0.02 * gap);
        }
    }

    #[test]
    fn beurling_matches_principal_value_quadrature() {
        // punch out |w − z| ≤ 3h; the punched disc contributes −½ε²∂²f(z) to leading order
        let s = GridSpec::new(128, 4.0).unwrap();
        let h = s.spacing();
        let eps = 3.0 * h;
        let f = sample(s, |z| (z + C64::new(0.2, 0.0)) * (-z.norm_sqr() / 0.5).exp()).unwrap();
        let bf = beurling(&f);
        let d2 = wirtinger_derivative(&f, (2, 0));
        let scale = bf.max_abs();
        for (j, k) in [(64, 64), (70, 60), (58, 66)] {
            let z = s.point(j, k);
            let mut acc = ZERO;
            for i in 0..s.len() {
                let w = s.point_at(i);
                if (w - z).norm() <= eps {
                    continue;
                }
                acc += f.values()[i] / ((z - w) * (z - w));
            }
            let pv = -acc * h * h / PI - 0.5 * eps * eps * d2.value(j, k);
            assert!((pv - bf.value(j, k)).norm() < 1e-2 * scale, "{pv} vs {}", bf.value(j, k));
        }
    }

    #[test]
    fn truncations() {
        let s = GridSpec::new(128, 2.0).unwrap();
        let full = RegionMask::full(s);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = bump(s, &mut rng);
        let a = truncated_apply(&MultiplierOp::beurling(), &f, &full, &full).unwrap();
        assert_eq!(a.values(), beurling(&f).values());
        let disc = RegionMask::disc(s, c(0.0), 1.0);
        let one = GridField::constant(s, c(1.0));
        let twice = truncated_apply(&MultiplierOp::beurling(), &one, &disc, &disc).unwrap();
        let bo = beurling_truncated(&twice, &disc).unwrap();
        let b2 = truncated_apply(&MultiplierOp::beurling_power(2), &one, &disc, &disc).unwrap();
        let r1 = reflection_rm(&one, 1, &disc).unwrap();
        let diff = b2.sub(&bo).unwrap().sub(&r1).unwrap().max_abs();
        assert!(diff < 1e-10);
        assert_eq!(reflection_rm(&f, 1, &full).unwrap().max_abs(), 0.0);
        assert!(reflection_rm(&f, 0, &disc).is_err());
    }

    #[test]
    fn commutator_cases() {
        let s = GridSpec::new(64, 2.0).unwrap();
        let full = RegionMask::full(s);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = bump(s, &mut rng);
        let cst = GridField::constant(s, C64::new(0.3, 0.1));
        assert!(commutator(&cst, &f, &full).unwrap().max_abs() < 1e-12);
        assert_eq!(commutator(&GridField::zeros(s), &f, &full).unwrap().max_abs(), 0.0);
        let disc = RegionMask::disc(s, c(0.0), 1.0);
        let mu = sample(s, |z| c(0.5 * (-z.norm_sqr() / 0.2).exp())).unwrap();
        let a = commutator(&mu.scale(c(2.5)), &f, &disc).unwrap();
        let b = commutator(&mu, &f, &disc).unwrap().scale(c(2.5));
        assert!(a.sub(&b).unwrap().max_abs() < 1e-12 * b.max_abs().max(1.0));
    }

    #[test]
    fn aux_residue_values_on_disc() {
        let circle = BoundaryCurve::circle(c(0.0), 1.0, 256).unwrap();
        let pts = [C64::new(0.1, 0.2), C64::new(-0.5, 0.3), C64::new(0.0, -0.7)];
        let h0 = aux_h_m(&pts, 0, &circle, 256);
        let h1 = aux_h_m(&pts, 1, &circle, 256);
        for (i, z) in pts.iter().enumerate() {
            assert!((h0.values[i] - C64::new(0.0, 2.0 * PI)).norm() < 1e-10);
            assert!((h1.values[i] + C64::new(0.0, 2.0 * PI) * z.conj()).norm() < 1e-10);
            assert!(!h0.near_boundary[i]);
        }
        let near = aux_h_m(&[C64::new(0.999, 0.0)], 0, &circle, 256);
        assert!(near.near_boundary[0]);
        // ∂̄h_1 by finite differences
        let e = 1e-4;
        let z = C64::new(0.2, 0.1);
        let v = aux_h_m(&[z + e, z - e, z + C64::new(0.0, e), z - C64::new(0.0, e)], 1, &circle, 256).values;
        let dx = (v[0] - v[1]) / (2.0 * e);
        let dy = (v[2] - v[3]) / (2.0 * e);
        let dbar = 0.5 * (dx + C64::new(0.0, 1.0) * dy);
        assert!((dbar + C64::new(0.0, 2.0 * PI)).norm() < 1e-6);
    }

    #[test]
    fn aux_derivatives_match_finite_differences() {
        let curve = BoundaryCurve::limacon(0.1, 512).unwrap();
        let nodes = curve.contour_nodes(512);
        let z = C64::new(0.1, -0.2);
        let e = 1e-4;
        for (m, j) in [(1u32, 0u32), (2, 1), (3, 2)] {
            let f = |w: C64| aux_derivative(&nodes, w, m, j, 0, 0);
            let dx = (f(z + e) - f(z - e)) / (2.0 * e);
            let dy = (f(z + C64::new(0.0, e)) - f(z - C64::new(0.0, e))) / (2.0 * e);
            let d = 0.5 * (dx - C64::new(0.0, 1.0) * dy);
            let db = 0.5 * (dx + C64::new(0.0, 1.0) * dy);
            let sd = aux_derivative(&nodes, z, m, j, 1, 0);
            let sdb = aux_derivative(&nodes, z, m, j, 0, 1);
            assert!((d - sd).norm() < 1e-6 * sd.norm().max(1.0));
            assert!((db - sdb).norm() < 1e-6 * sdb.norm().max(1.0));
        }
        // Bχ from the contour equals the grid transform inside the domain
        let bz = beurling_chi_contour(&nodes, z);
        let disc_nodes = BoundaryCurve::circle(c(0.0), 1.0, 256).unwrap().contour_nodes(256);
        assert!(beurling_chi_contour(&disc_nodes, z).norm() < 1e-12);
        assert!(bz.norm() > 1e-3);
    }

    #[test]
    fn kernel_km_refuses_near_points() {
        let circle = BoundaryCurve::circle(c(0.0), 1.0, 256).unwrap();
        assert!(kernel_km(C64::new(0.999, 0.0), c(0.0), 1, &circle).is_err());
        assert!(kernel_km(c(0.1), c(0.1001), 1, &circle).is_err());
        let k = kernel_km(c(0.2), c(-0.3), 1, &circle).unwrap();
        assert!(k.value.norm() < 1e-10);
        assert!(k.quadrature_nodes >= 512);
    }

    #[test]
    fn kernel_km_contour_matches_area_integral() {
        // Green: ∫_{Ω^c} m(w̄−ξ̄)^{m−1}/((z−w)³(w−ξ)^{m+1}) dm = −(1/2i) ∮ F dw
        let eps = 0.1;
        let curve = BoundaryCurve::limacon(eps, 256).unwrap();
        let w_of = |t: f64| C64::from_polar(1.0, t) + eps * C64::from_polar(1.0, 2.0 * t);
        let dw_of = |t: f64| C64::new(0.0, 1.0) * (C64::from_polar(1.0, t) + 2.0 * eps * C64::from_polar(1.0, 2.0 * t));
        let (z, xi) = (C64::new(0.2, 0.05), C64::new(-0.3, 0.1));
        for m in 1..=2u32 {
            let k = kernel_km(z, xi, m, &curve).unwrap().value;
            let nt = 256;
            let (rn, rw) = gauss_legendre_on(32, 0.0, 1.0);
            let mut area = ZERO;
            for it in 0..nt {
                let th = 2.0 * PI * it as f64 / nt as f64;
                // boundary radius along the ray: solve arg w(t) = θ
                let mut t = th;
                for _ in 0..30 {
                    let w = w_of(t);
                    let g = (w / C64::from_polar(1.0, th)).arg();
                    let gp = (dw_of(t) / w).im;
                    t -= g / gp;
                }
                let rb = w_of(t).norm();
                let dir = C64::from_polar(1.0, th);
                for (a, b) in [(rb, 2.0 * rb), (2.0 * rb, 5.0)] {
                    for (s, wt) in rn.iter().zip(&rw) {
                        let r = a + (b - a) * s;
                        let w = dir * r;
                        let g = (w - xi).conj().powu(m - 1) / ((z - w).powu(3) * (w - xi).powu(m + 1));
                        area += g * (r * wt * (b - a) * 2.0 * PI / nt as f64);
                    }
                }
            }
            let from_contour = -k / C64::new(0.0, 2.0 * m as f64);
            assert!((area - from_contour).norm() <= 1e-4 * from_contour.norm(), "m={m}: {area} vs {from_contour}");
        }
    }

    #[test]
    fn taylor_cases() {
        let mut d = HashMap::new();
        d.insert((0, 0), C64::new(2.0, 1.0));
        let p = taylor_polynomial(&d, c(0.3), 0).unwrap();
        assert_eq!(p.eval(C64::new(5.0, 5.0)), C64::new(2.0, 1.0));
        assert!(taylor_polynomial(&d, c(0.3), 1).is_err());
        // e^z at 0, degree 2: ∂^a e^z = e^z, ∂̄ e^z = 0
        let mut d = HashMap::new();
        for a in 0..=2u32 {
            for b in 0..=(2 - a) {
                d.insert((a, b), if b == 0 { c(1.0) } else { ZERO });
            }
        }
        let p = taylor_polynomial(&d, ZERO, 2).unwrap();
        assert!((p.eval(c(0.1)) - c(1.105)).norm() < 1e-15);
        // polynomial in z, z̄ of degree 2 is reproduced
        let f = |w: C64| C64::new(1.0, 2.0) * w * w.conj() + w * w - C64::new(0.0, 3.0) * w.conj() + 0.5;
        let z0 = C64::new(0.2, -0.4);
        let mut d = HashMap::new();
        d.insert((0, 0), f(z0));
        d.insert((1, 0), C64::new(1.0, 2.0) * z0.conj() + 2.0 * z0);
        d.insert((0, 1), C64::new(1.0, 2.0) * z0 - C64::new(0.0, 3.0));
        d.insert((2, 0), c(2.0));
        d.insert((1, 1), C64::new(1.0, 2.0));
        d.insert((0, 2), ZERO);
        let p = taylor_polynomial(&d, z0, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let w = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            assert!((p.eval(w) - f(w)).norm() < 1e-12);
        }
    }

    #[test]
    fn kernel_fit_degenerates_on_disc() {
        let circle = BoundaryCurve::circle(c(0.0), 1.0, 256).unwrap();
        let oracle = ContourOracle::new(&circle, 512);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pairs: Vec<(C64, C64)> = (0..20)
            .map(|_| {
                let a = C64::from_polar(rng.random_range(0.0..0.6), rng.random_range(0.0..6.3));
                let b = C64::from_polar(rng.random_range(0.0..0.6), rng.random_range(0.0..6.3));
                (a, b)
            })
            .filter(|(a, b)| (a - b).norm() > 0.2)
            .collect();
        let r = fit_kernel_identity(&circle, &oracle, 1, &pairs);
        assert!(matches!(r, Err(QcError::IllConditioned(_))));
    }

    #[test]
    fn kernel_identity_closed_form_on_limacon() {
        let curve = BoundaryCurve::limacon(0.1, 256).unwrap();
        let oracle = ContourOracle::new(&curve, 1024);
        let pairs = [
            (C64::new(0.1, 0.2), C64::new(-0.3, -0.1)),
            (C64::new(-0.2, 0.4), C64::new(0.4, 0.0)),
            (C64::new(0.0, -0.4), C64::new(0.3, 0.3)),
        ];
        for m in 1..=2u32 {
            let fit = KernelIdentityFit {
                m,
                constants: kernel_constants_closed_form(m),
                condition: 1.0,
                fit_residual: 0.0,
            };
            let r = verify_kernel_identity(&fit, &curve, &oracle, &pairs).unwrap();
            assert!(r < 1e-6, "m={m}: {r}");
        }
    }

    #[test]
    fn half_plane_kernel_vanishes() {
        let (x, y) = (C64::new(0.1, 0.6), C64::new(-0.2, 0.4));
        for (m1, m2, m3) in [(3, 2, 1), (3, 3, 2), (2, 2, 1), (3, 1, 0)] {
            let v = half_plane_line_integral(x, y, m1, m2, m3, 1e8);
            assert!(v.norm() <= 1e-6, "{m1},{m2},{m3}: {v}");
        }
    }
}
