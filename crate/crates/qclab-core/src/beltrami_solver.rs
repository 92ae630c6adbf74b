//! Principal solutions of ∂̄f = μ ∂f by Neumann iteration of
//! h = μ + μ B h, with f = z + C h.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, QcError, Result};
use crate::grid_field::{lp_norm, same_grid, GridField, GridSpec, RegionMask};
use crate::singular_transforms::{beurling, cauchy_planar};
use crate::C64;

/// A Beltrami coefficient supported in Ω with sup |μ| < 1.
#[derive(Clone, Debug)]
pub struct BeltramiProblem {
    mu: GridField,
    omega: RegionMask,
    kappa: f64,
}

impl BeltramiProblem {
    /// Masks μ to Ω and, while supp μ is not inside [−L/2, L/2]², zero-pads
    /// both onto a doubled box.
    pub fn new(mu: GridField, omega: RegionMask) -> Result<Self> {
        same_grid(mu.spec(), omega.spec())?;
        let mut mu = mu.masked(&omega)?;
        let mut omega = omega;
        let kappa = mu.max_abs();
        if kappa >= 1.0 {
            return Err(QcError::NotContractive(kappa));
        }
        while !mu.supported_within(0.5 * mu.spec().half_width(), 0.0) {
            if mu.spec().n() >= 4096 {
                return Err(invalid("coefficient support does not fit in the box"));
            }
            mu = mu.zero_padded();
            omega = omega.zero_padded();
        }
        Ok(Self { mu, omega, kappa })
    }

    pub fn mu(&self) -> &GridField {
        &self.mu
    }

    pub fn omega(&self) -> &RegionMask {
        &self.omega
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn spec(&self) -> &GridSpec {
        self.mu.spec()
    }
}

/// One row of the iteration log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// ‖h_k − h_{k−1}‖₂.
    pub change: f64,
    /// ‖h_k − h_{k−1}‖₂ / ‖h_k‖₂.
    pub relative_change: f64,
    /// ‖μ + μBh_{k−1} − h_{k−1}‖₂ / ‖μ‖₂.
    pub residual: f64,
}

/// Fixed point h of h ← μ + μ·B h with its iteration log.
#[derive(Clone, Debug)]
pub struct NeumannResult {
    pub h: GridField,
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
}

impl NeumannResult {
    /// change_k / change_{k−1} for k ≥ 2 (index 0 is iteration 2).
    pub fn change_ratios(&self) -> Vec<f64> {
        self.history
            .windows(2)
            .map(|w| if w[0].change > 0.0 { w[1].change / w[0].change } else { 0.0 })
            .collect()
    }

    /// CSV "iter,change,residual".
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["iter", "change", "residual"])?;
        for r in &self.history {
            wr.write_record(&[r.iteration.to_string(), r.relative_change.to_string(), r.residual.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }
}

pub fn neumann_solve(problem: &BeltramiProblem, tol: f64, max_iter: usize) -> Result<NeumannResult> {
    if problem.kappa >= 1.0 {
        return Err(QcError::NotContractive(problem.kappa));
    }
    let spec = *problem.spec();
    let full = RegionMask::full(spec);
    let mu = &problem.mu;
    let mu_norm = lp_norm(mu, 2.0, &full)?;
    let mut h = GridField::zeros(spec);
    let mut history = Vec::new();
    for it in 1..=max_iter {
        let next = mu.add(&mu.mul(&beurling(&h))?)?;
        let diff = lp_norm(&next.sub(&h)?, 2.0, &full)?;
        let size = lp_norm(&next, 2.0, &full)?;
        let rel = if size > 0.0 { diff / size } else { 0.0 };
        history.push(IterationRecord {
            iteration: it,
            change: diff,
            relative_change: rel,
            residual: if mu_norm > 0.0 { diff / mu_norm } else { 0.0 },
        });
        h = next;
        if rel < tol {
            return Ok(NeumannResult {
                h,
                iterations: it,
                history,
            });
        }
    }
    let history_changes = history.iter().map(|r| r.relative_change).collect::<Vec<_>>();
    Err(QcError::Diverged {
        iterations: max_iter,
        last_change: *history_changes.last().unwrap_or(&f64::NAN),
        history: history_changes,
    })
}

/// f = z + C h on the problem grid.
#[derive(Clone, Debug)]
pub struct PrincipalSolution {
    pub h: GridField,
    pub f_minus_id: GridField,
    pub iterations: usize,
    /// Relative L² fixed-point residual ‖h − μBh − μ‖/‖μ‖.
    pub residual: f64,
    /// Edge max of f − z within the O(1/z) bound 3 sup|h|·area/(πL).
    pub edge_decay_ok: bool,
}

impl PrincipalSolution {
    /// ∂f = 1 + B h, with the same periodic B the iteration used.
    pub fn d_f(&self) -> GridField {
        beurling(&self.h).map(|v| v + 1.0)
    }

    /// ∂̄f = h.
    pub fn dbar_f(&self) -> GridField {
        self.h.clone()
    }

    /// f itself.
    pub fn f(&self) -> GridField {
        self.f_minus_id.map_with_point(|z, v| z + v)
    }

    pub fn spec(&self) -> &GridSpec {
        self.h.spec()
    }

    /// f at an arbitrary point by bilinear interpolation of f − z.
    pub fn eval(&self, z: C64) -> C64 {
        z + self.f_minus_id.interpolate(z)
    }
}

pub fn principal_solution(problem: &BeltramiProblem, sol: &NeumannResult) -> Result<PrincipalSolution> {
    let spec = *problem.spec();
    let h = sol.h.clone();
    let mut f = cauchy_planar(&h);
    let l = spec.half_width();
    let frame = RegionMask::from_fn(spec, |z| z.norm() > 0.8 * l);
    let mass: C64 = h.values().iter().sum::<C64>() * spec.cell_area();
    if frame.count() > 0 {
        let got: C64 = f.masked(&frame)?.values().iter().sum::<C64>() / frame.count() as f64;
        let tail: C64 = frame
            .indices()
            .iter()
            .map(|&i| mass / (std::f64::consts::PI * spec.point_at(i)))
            .sum::<C64>()
            / frame.count() as f64;
        let shift = got - tail;
        f = f.map(|v| v - shift);
    }
    let full = RegionMask::full(spec);
    let mu = &problem.mu;
    let res = mu.add(&mu.mul(&beurling(&h))?)?.sub(&h)?;
    let mu_norm = lp_norm(mu, 2.0, &full)?;
    let residual = if mu_norm > 0.0 { lp_norm(&res, 2.0, &full)? / mu_norm } else { 0.0 };
    let edge = RegionMask::from_fn(spec, |z| z.re.abs().max(z.im.abs()) >= l - 1.5 * spec.spacing());
    let area = problem.omega.area();
    let bound = 3.0 * h.max_abs() * area / (std::f64::consts::PI * l);
    let edge_max = lp_norm(&f, f64::INFINITY, &edge)?;
    Ok(PrincipalSolution {
        h,
        f_minus_id: f,
        iterations: sol.iterations,
        residual,
        edge_decay_ok: edge_max <= bound + 1e-12,
    })
}

/// Solve and assemble in one call.
pub fn solve(problem: &BeltramiProblem, tol: f64, max_iter: usize) -> Result<(NeumannResult, PrincipalSolution)> {
    let n = neumann_solve(problem, tol, max_iter)?;
    let p = principal_solution(problem, &n)?;
    Ok((n, p))
}

/// ‖∂̄f − μ∂f‖_{L²(Ω)} / ‖∂f‖_{L²(Ω)}.
pub fn beltrami_residual(d_f: &GridField, dbar_f: &GridField, mu: &GridField, omega: &RegionMask) -> Result<f64> {
    let r = dbar_f.sub(&mu.mul(d_f)?)?;
    let den = lp_norm(d_f, 2.0, omega)?;
    if den == 0.0 {
        return Err(invalid("∂f vanishes on Ω"));
    }
    Ok(lp_norm(&r, 2.0, omega)? / den)
}

/// Distortion statistics of f on Ω.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistortionReport {
    /// min (|∂f| − |∂̄f|).
    pub min_gap: f64,
    pub jacobian_min: f64,
    pub jacobian_max: f64,
    /// min and max of |f(x) − f(y)|/|x − y| over sampled pairs.
    pub lipschitz_lower: f64,
    pub lipschitz_upper: f64,
    /// Every grid cell inside Ω keeps its orientation under f.
    pub orientation_preserved: bool,
}

pub fn distortion_report(
    f: &GridField,
    d_f: &GridField,
    dbar_f: &GridField,
    omega: &RegionMask,
    seed: u64,
) -> Result<DistortionReport> {
    same_grid(f.spec(), omega.spec())?;
    let idx = omega.indices();
    if idx.is_empty() {
        return Err(invalid("empty region"));
    }
    let (mut gap, mut jmin, mut jmax) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &i in &idx {
        let (a, b) = (d_f.values()[i].norm(), dbar_f.values()[i].norm());
        gap = gap.min(a - b);
        let j = a * a - b * b;
        jmin = jmin.min(j);
        jmax = jmax.max(j);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let spec = f.spec();
    for _ in 0..4000 {
        let a = idx[rng.random_range(0..idx.len())];
        let b = idx[rng.random_range(0..idx.len())];
        if a == b {
            continue;
        }
        let r = (f.values()[a] - f.values()[b]).norm() / (spec.point_at(a) - spec.point_at(b)).norm();
        lo = lo.min(r);
        hi = hi.max(r);
    }
    let n = spec.n();
    let mut orientation = true;
    for &i in &idx {
        let (j, k) = spec.coords(i);
        if j + 1 >= n || k + 1 >= n || !omega.contains(j + 1, k) || !omega.contains(j, k + 1) {
            continue;
        }
        let e1 = f.value(j + 1, k) - f.value(j, k);
        let e2 = f.value(j, k + 1) - f.value(j, k);
        if (e1.conj() * e2).im <= 0.0 {
            orientation = false;
        }
    }
    Ok(DistortionReport {
        min_gap: gap,
        jacobian_min: jmin,
        jacobian_max: jmax,
        lipschitz_lower: lo,
        lipschitz_upper: hi,
        orientation_preserved: orientation,
    })
}

/// Largest distance from f(z), z on the grid ring ||z| − 1| ≤ h/2, to the
/// ellipse {e^{it} + k e^{−it}}.
pub fn ellipse_image_deviation(sol: &PrincipalSolution, k: f64) -> f64 {
    let spec = *sol.spec();
    let h = spec.spacing();
    let m = 8192;
    let ell: Vec<C64> = (0..m)
        .map(|j| {
            let t = std::f64::consts::TAU * j as f64 / m as f64;
            C64::from_polar(1.0, t) + k * C64::from_polar(1.0, -t)
        })
        .collect();
    let f = sol.f();
    let mut worst: f64 = 0.0;
    for i in 0..spec.len() {
        let z = spec.point_at(i);
        if (z.norm() - 1.0).abs() > 0.5 * h {
            continue;
        }
        let w = f.values()[i];
        let d = ell.iter().map(|&e| (e - w).norm()).fold(f64::INFINITY, f64::min);
        worst = worst.max(d);
    }
    worst
}
