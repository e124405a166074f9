//! Large-`p` level densities from the saddle-point equation
//!
//! `L'(q) = μ/(p(q+1)) - n2/(p q) - (1/p) Σ_j Λ_j/(b - qΛ_j) = 0`,
//!
//! with `μ = n1 + n2 - p`. Away from the poles this is a real polynomial of
//! degree `p + 1`; its roots are real apart from at most one conjugate pair,
//! and the density is read off the root in the upper half-plane. The limit is
//! the same for both `β`.

use std::f64::consts::PI;

use log::debug;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    jacobi_to_cl_point, CorrelationSpectrum, DensityCurve, Domain, EnsembleParams, EvaluationGrid, Method,
};
use crate::quad::{integrate_finite, QuadOptions};

/// Roots count as complex when `Im q > IM_TOL_REL·(1 + |Re q|)`.
pub const IM_TOL_REL: f64 = 1e-8;
/// Below `B_MIN_REL·min Λ` all poles collide and the density is set to 0.
pub const B_MIN_REL: f64 = 1e-12;
/// Largest accepted relative residual of a returned saddle point.
pub const MAX_RESIDUAL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleSolution {
    pub b: f64,
    /// The root in the upper half-plane; `None` outside the support.
    pub q0: Option<Complex64>,
    /// `|L'(q0)|` divided by the sum of the moduli of its terms, so that it
    /// stays meaningful when `q0` is very small or very large. Zero when
    /// `q0` is absent.
    pub residual: f64,
}

/// Distinct `Λ` values with multiplicities.
fn group(spectrum: &CorrelationSpectrum) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for &l in spectrum.lambdas() {
        match out.last_mut() {
            Some((v, m)) if *v == l => *m += 1.0,
            _ => out.push((l, 1.0)),
        }
    }
    out
}

fn mul_linear(poly: &[f64], c0: f64, c1: f64) -> Vec<f64> {
    let mut out = vec![0.0; poly.len() + 1];
    for (k, v) in poly.iter().enumerate() {
        out[k] += c0 * v;
        out[k + 1] += c1 * v;
    }
    out
}

fn add_scaled(acc: &mut [f64], poly: &[f64], s: f64) {
    for (a, v) in acc.iter_mut().zip(poly) {
        *a += s * v;
    }
}

/// Ascending coefficients of
/// `μ q ∏(b - qλ)^{m} - n2 (q+1) ∏(b - qλ) - q(q+1) Σ m λ ∏_{other}(b - qλ)`
/// over the groups `(λ, m)`.
fn cleared_polynomial(b: f64, groups: &[(f64, f64)], params: &EnsembleParams) -> Vec<f64> {
    let mu = params.mu() as f64;
    let n2 = params.n2() as f64;
    let d = groups.len();
    let mut full = vec![1.0];
    for &(l, _) in groups {
        full = mul_linear(&full, b, -l);
    }
    let mut out = vec![0.0; d + 2];
    add_scaled(&mut out, &mul_linear(&full, 0.0, mu), 1.0);
    add_scaled(&mut out, &mul_linear(&full, -n2, -n2), 1.0);
    let qq1 = [0.0, 1.0, 1.0];
    for (j, &(lj, mj)) in groups.iter().enumerate() {
        let mut prod = qq1.to_vec();
        for (k, &(lk, _)) in groups.iter().enumerate() {
            if k != j {
                prod = mul_linear(&prod, b, -lk);
            }
        }
        add_scaled(&mut out, &prod, -mj * lj);
    }
    out
}

/// Ascending coefficients (length `p + 2`) of the saddle equation cleared of
/// its denominators, one linear factor per `Λ_j`.
pub fn saddle_polynomial(b: f64, spectrum: &CorrelationSpectrum, params: &EnsembleParams) -> Result<Vec<f64>> {
    check_b(b)?;
    spectrum.check_against(params)?;
    let singles: Vec<(f64, f64)> = spectrum.lambdas().iter().map(|&l| (l, 1.0)).collect();
    Ok(cleared_polynomial(b, &singles, params))
}

fn check_b(b: f64) -> Result<()> {
    if b.is_finite() && b > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("b must be positive and finite, got {b}")))
    }
}

/// `(L'(q), L''(q), Σ|terms of L'|)`.
fn lagrangian_derivatives(
    q: Complex64,
    b: f64,
    groups: &[(f64, f64)],
    params: &EnsembleParams,
) -> (Complex64, Complex64, f64) {
    let p = params.p() as f64;
    let mu = params.mu() as f64;
    let n2 = params.n2() as f64;
    let t1 = mu / (q + 1.0);
    let t2 = -n2 / q;
    let mut d1 = t1 + t2;
    let mut d2 = -t1 / (q + 1.0) - t2 / q;
    let mut scale = t1.norm() + t2.norm();
    for &(l, m) in groups {
        let r = 1.0 / (b - q * l);
        let t = -m * l * r;
        d1 += t;
        d2 += t * l * r;
        scale += t.norm();
    }
    (d1 / p, d2 / p, scale / p)
}

/// `L'(q)` at complex `q`.
pub fn saddle_equation(q: Complex64, b: f64, spectrum: &CorrelationSpectrum, params: &EnsembleParams) -> Complex64 {
    lagrangian_derivatives(q, b, &group(spectrum), params).0
}

fn relative_residual(q: Complex64, b: f64, groups: &[(f64, f64)], params: &EnsembleParams) -> f64 {
    let (d1, _, scale) = lagrangian_derivatives(q, b, groups, params);
    d1.norm() / scale
}

/// All roots of the saddle equation (one per distinct `Λ` plus one).
pub fn saddle_roots(b: f64, spectrum: &CorrelationSpectrum, params: &EnsembleParams) -> Result<Vec<Complex64>> {
    check_b(b)?;
    spectrum.check_against(params)?;
    roots_grouped(b, &group(spectrum), params)
}

/// The cleared polynomial in `w = q/b` divided by `b^d`, whose roots sit
/// near `1/λ` whatever the size of `b`.
fn scaled_polynomial(b: f64, groups: &[(f64, f64)], params: &EnsembleParams) -> Vec<f64> {
    let mu = params.mu() as f64;
    let n2 = params.n2() as f64;
    let mut full = vec![1.0];
    for &(l, _) in groups {
        full = mul_linear(&full, 1.0, -l);
    }
    let mut out = vec![0.0; groups.len() + 2];
    add_scaled(&mut out, &mul_linear(&full, 0.0, mu * b), 1.0);
    add_scaled(&mut out, &mul_linear(&full, -n2, -n2 * b), 1.0);
    for (j, &(lj, mj)) in groups.iter().enumerate() {
        let mut prod = vec![0.0, 1.0, b];
        for (k, &(lk, _)) in groups.iter().enumerate() {
            if k != j {
                prod = mul_linear(&prod, 1.0, -lk);
            }
        }
        add_scaled(&mut out, &prod, -mj * lj);
    }
    out
}

fn real_derivative(q: f64, b: f64, groups: &[(f64, f64)], params: &EnsembleParams) -> f64 {
    let mut d = params.mu() as f64 / (q + 1.0) - params.n2() as f64 / q;
    for &(l, m) in groups {
        d -= m * l / (b - q * l);
    }
    d
}

/// Roots of the saddle equation in the `q` coordinate.
///
/// Between two consecutive poles `b/λ` the derivative runs from `+∞` to
/// `-∞`, which brackets `d - 1` real roots; bisection finds them. The two
/// remaining roots follow from the sum and product of all roots of the
/// scaled polynomial, and every root is then polished by Newton steps on
/// the rational form. Clustered poles do not slow any of this down.
fn roots_grouped(b: f64, groups: &[(f64, f64)], params: &EnsembleParams) -> Result<Vec<Complex64>> {
    let coeffs = scaled_polynomial(b, groups, params);
    let n = coeffs.len() - 1;
    // Poles in q, ascending (λ descending).
    let poles: Vec<f64> = groups.iter().rev().map(|(l, _)| b / l).collect();
    let mut real = Vec::with_capacity(n);
    for w in poles.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if real_derivative(mid, b, groups, params) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        real.push(0.5 * (lo + hi));
    }
    let sum_all = -coeffs[n - 1] / coeffs[n];
    let prod_all = if n.is_multiple_of(2) { 1.0 } else { -1.0 } * coeffs[0] / coeffs[n];
    let s = sum_all - real.iter().map(|q| q / b).sum::<f64>();
    let prod = real.iter().fold(prod_all, |acc, q| acc / (q / b));
    let disc = Complex64::new(s * s - 4.0 * prod, 0.0).sqrt();
    let pair = [0.5 * (s + disc) * b, 0.5 * (s - disc) * b];
    if !pair.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::numerical(format!(
            "saddle root deflation failed at b={b}, coefficients {coeffs:?}"
        )));
    }
    let mut roots: Vec<Complex64> = real.into_iter().map(|q| Complex64::new(q, 0.0)).collect();
    roots.extend(pair);
    for z in roots.iter_mut() {
        *z = newton_polish(*z, b, groups, params);
    }
    Ok(roots)
}

/// Newton steps on the rational form, each kept only if it lowers `|L'|`.
fn newton_polish(mut q: Complex64, b: f64, groups: &[(f64, f64)], params: &EnsembleParams) -> Complex64 {
    let mut best = lagrangian_derivatives(q, b, groups, params);
    for _ in 0..30 {
        let (d1, d2, _) = best;
        if d1 == Complex64::new(0.0, 0.0) || d2 == Complex64::new(0.0, 0.0) {
            break;
        }
        let next = q - d1 / d2;
        let eval = lagrangian_derivatives(next, b, groups, params);
        if !(eval.0.norm() < d1.norm()) {
            break;
        }
        q = next;
        best = eval;
    }
    q
}

/// Solves the saddle equation at `b` and selects the root in the upper
/// half-plane.
pub fn solve_saddle(b: f64, spectrum: &CorrelationSpectrum, params: &EnsembleParams) -> Result<SaddleSolution> {
    check_b(b)?;
    spectrum.check_against(params)?;
    let absent = SaddleSolution {
        b,
        q0: None,
        residual: 0.0,
    };
    if b < B_MIN_REL * spectrum.lambdas()[0] {
        return Ok(absent);
    }
    let groups = group(spectrum);
    let roots = roots_grouped(b, &groups, params)?;
    let upper: Vec<Complex64> = roots
        .iter()
        .copied()
        .filter(|z| z.im > IM_TOL_REL * (1.0 + z.re.abs()))
        .collect();
    let q = match upper.as_slice() {
        [] => return Ok(absent),
        [q] => *q,
        _ => {
            return Err(Error::numerical(format!(
                "{} saddle points in the upper half-plane at b={b}: {upper:?}",
                upper.len()
            )))
        }
    };
    let residual = relative_residual(q, b, &groups, params);
    if !(residual < MAX_RESIDUAL) {
        return Err(Error::numerical(format!(
            "saddle residual {residual:e} at b={b}, q0={q}"
        )));
    }
    Ok(SaddleSolution {
        b,
        q0: Some(q),
        residual,
    })
}

/// `S'(b) = μ/(πp)·(1/b)·Im q0/((Re q0 + 1)^2 + Im^2 q0)`, zero outside the
/// support.
pub fn asymptotic_cl_density(b: f64, spectrum: &CorrelationSpectrum, params: &EnsembleParams) -> Result<f64> {
    let s = solve_saddle(b, spectrum, params)?;
    Ok(s.q0.map_or(0.0, |q| form_compact(b, q, params)))
}

fn form_compact(b: f64, q: Complex64, params: &EnsembleParams) -> f64 {
    let mu = params.mu() as f64;
    let p = params.p() as f64;
    mu / (PI * p) / b * q.im / ((q.re + 1.0).powi(2) + q.im * q.im)
}

/// The resolvent form `(1/πp) Σ_j Λ_j Im q0 / ((b - Λ_j Re q0)^2 + (Λ_j Im q0)^2)`;
/// equal to [`asymptotic_cl_density`] by the saddle equation.
pub fn asymptotic_cl_density_resolvent(b: f64, spectrum: &CorrelationSpectrum, params: &EnsembleParams) -> Result<f64> {
    let s = solve_saddle(b, spectrum, params)?;
    let Some(q) = s.q0 else { return Ok(0.0) };
    let p = params.p() as f64;
    let sum: f64 = spectrum
        .lambdas()
        .iter()
        .map(|&l| l * q.im / ((b - l * q.re).powi(2) + (l * q.im).powi(2)))
        .sum();
    Ok(sum / (PI * p))
}

/// `S(x) = 2μ/(πp)·1/(1-x^2)·Im q0/|q0 + 1|^2` with `q0` taken at
/// `b = (1-x)/(1+x)`.
pub fn asymptotic_jacobi_density(x: f64, spectrum: &CorrelationSpectrum, params: &EnsembleParams) -> Result<f64> {
    let b = jacobi_to_cl_point(x)?;
    let s = solve_saddle(b, spectrum, params)?;
    let Some(q) = s.q0 else { return Ok(0.0) };
    let mu = params.mu() as f64;
    let p = params.p() as f64;
    Ok(2.0 * mu / (PI * p) / (1.0 - x * x) * q.im / ((q.re + 1.0).powi(2) + q.im * q.im))
}

/// `∫_{-1}^{1} S(x) dx`; the formula is expected, not forced, to give 1.
pub fn asymptotic_mass(spectrum: &CorrelationSpectrum, params: &EnsembleParams, tol: f64) -> Result<f64> {
    let failure = std::sync::Mutex::new(None);
    let opts = QuadOptions::default().with_tol(tol).with_initial_segments(64);
    let m = integrate_finite(
        |x| match asymptotic_jacobi_density(x, spectrum, params) {
            Ok(v) => v,
            Err(e) => {
                failure.lock().unwrap().get_or_insert(e);
                f64::NAN
            }
        },
        -1.0,
        1.0,
        &opts,
    );
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e.context("asymptotic mass"));
    }
    m
}

/// The asymptotic density on `grid`, not renormalized; the measured mass is
/// attached as the `mass` note and drives the normalization residual.
pub fn level_density_curve(
    params: &EnsembleParams,
    spectrum: &CorrelationSpectrum,
    grid: &EvaluationGrid,
) -> Result<DensityCurve> {
    spectrum.check_against(params)?;
    let values: Vec<f64> = grid
        .points()
        .par_iter()
        .map(|&v| match grid.domain() {
            Domain::Jacobi => asymptotic_jacobi_density(v, spectrum, params),
            Domain::CauchyLorentz => asymptotic_cl_density(v, spectrum, params),
        })
        .collect::<Result<_>>()?;
    let mass = asymptotic_mass(spectrum, params, 1e-7)?;
    debug!("asymptotic mass {mass}");
    Ok(DensityCurve::new(grid.clone(), values, Method::Asymptotic, (mass - 1.0).abs())?.with_note("mass", mass))
}
