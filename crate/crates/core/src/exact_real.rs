//! Exact finite-size level density of the real (`β = 1`) ensembles.
//!
//! The density is a finite sum over pairs of cells `(V_{l1}, V_{l2})` of
//! products of three kinds of factors: the finite sums `C`, the one-fold
//! integrals `g0` with square-root endpoint singularities, and the integrals
//! `g1` which carry an extra `1/|bΛ_i^{-1} - r|` and need a finite-part
//! treatment on the two cells adjacent to `bΛ_i^{-1}`.
//!
//! The printed assembly fixes the density only up to a global sign and the
//! `1/p` trace normalization. The code applies the `1/p`, fixes the sign by
//! requiring positivity at a probe point near the bulk, and reports both.

use std::f64::consts::PI;

use log::{debug, warn};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact_complex::require_exact_spectrum;
use crate::model::{
    jacobi_to_cl_point, Beta, CorrelationSpectrum, DensityCurve, Domain, EnsembleParams, EvaluationGrid, Method,
};
use crate::quad::{integrate_finite, integrate_pv32, integrate_sqrt, Cell, QuadOptions, Singularity};
use crate::special::{elementary_symmetric_all, ln_factorial};

/// `C^c_{a,bexp}(κ; E)`, the `κ`-derivative of the `z^a` Fourier coefficient
/// of `(1+z)^bexp ∏_j (κ/E_j - z)`:
///
/// `Σ_{j=1}^{c} (-1)^{c-j} bexp! j / ((a-c+j)! (bexp-a+c-j)!) κ^{j-1} e_j(E^{-1})`
///
/// with `1/m! = 0` for negative `m`.
pub fn c_integral(a: i64, bexp: i64, c: usize, kappa: f64, energies: &[f64]) -> Result<f64> {
    if energies.len() != c {
        return Err(Error::invalid(format!(
            "C-integral needs {c} energies, got {}",
            energies.len()
        )));
    }
    if bexp < 0 {
        return Err(Error::invalid(format!("C-integral exponent must be >= 0, got {bexp}")));
    }
    if let Some(bad) = energies.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
        return Err(Error::invalid(format!(
            "C-integral energies must be positive, got {bad}"
        )));
    }
    let inv: Vec<f64> = energies.iter().map(|e| 1.0 / e).collect();
    let e = elementary_symmetric_all(&inv);
    let ln_bfact = ln_factorial(bexp as u64);
    let mut sum = 0.0;
    #[allow(clippy::needless_range_loop)]
    for j in 1..=c {
        let m1 = a - c as i64 + j as i64;
        let m2 = bexp - a + c as i64 - j as i64;
        if m1 < 0 || m2 < 0 {
            continue;
        }
        let sign = if (c - j).is_multiple_of(2) { 1.0 } else { -1.0 };
        let ratio = (ln_bfact - ln_factorial(m1 as u64) - ln_factorial(m2 as u64)).exp();
        sum += sign * ratio * j as f64 * kappa.powi(j as i32 - 1) * e[j];
    }
    Ok(sum)
}

/// Bounds of cell `V_l`, `0 <= l <= p`, for ascending `lambdas`:
/// `V_0 = [0, b/Λ_p)`, `V_l = (b/Λ_{p-l+1}, b/Λ_{p-l})`, `V_p = (b/Λ_1, ∞)`.
pub fn cell_bounds(b: f64, lambdas: &[f64], l: usize) -> Result<(f64, f64)> {
    let p = lambdas.len();
    if l > p {
        return Err(Error::invalid(format!("cell index {l} exceeds p = {p}")));
    }
    let lower = if l == 0 { 0.0 } else { b / lambdas[p - l] };
    let upper = if l == p { f64::INFINITY } else { b / lambdas[p - l - 1] };
    Ok((lower, upper))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealDensityOptions {
    /// Quadrature settings for the `g0` integrals.
    pub g0: QuadOptions,
    /// Quadrature settings for the `g1` integrals.
    pub g1: QuadOptions,
    /// Tolerance of the mass integral.
    pub mass_tol: f64,
}

impl Default for RealDensityOptions {
    fn default() -> Self {
        Self {
            g0: QuadOptions::default(),
            g1: QuadOptions::pv(),
            mass_tol: 1e-7,
        }
    }
}

/// Everything needed to evaluate the `β = 1` density for one
/// `(params, spectrum)` pair.
#[derive(Debug, Clone)]
pub struct RealDensityContext {
    params: EnsembleParams,
    spectrum: CorrelationSpectrum,
    options: RealDensityOptions,
    sign: f64,
}

/// Exponent pairs `(a, c)` of the four `g0` and two `g1` families.
fn g0_family(n2: i64, mu: i64) -> [(i64, i64); 4] {
    [(n2 + 1, mu + 2), (n2 - 1, mu + 2), (n2 - 1, mu), (n2 - 3, mu)]
}

fn g1_family(n2: i64, mu: i64) -> [(i64, i64); 2] {
    [(n2 + 1, mu), (n2 - 1, mu)]
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn det2(m: [[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn without(values: &[f64], skip: &[usize]) -> Vec<f64> {
    values
        .iter()
        .enumerate()
        .filter(|(k, _)| !skip.contains(k))
        .map(|(_, v)| *v)
        .collect()
}

/// All `g` values and `C` sums needed at one `b`.
struct Tables {
    p: usize,
    /// `g0[k][l]` for the four `(a, c)` families.
    g0: [Vec<f64>; 4],
    /// `g1[k][l * p + (i - 1)]`.
    g1: [Vec<f64>; 2],
    c_full: [f64; 3],
    c_one: Vec<[f64; 2]>,
    /// `C^{p-2}` for `i < j`, stored at `(i - 1) * p + (j - 1)`.
    c_two: Vec<f64>,
}

impl Tables {
    fn g1(&self, k: usize, l: usize, i: usize) -> f64 {
        self.g1[k][l * self.p + (i - 1)]
    }
}

impl RealDensityContext {
    pub fn new(params: &EnsembleParams, spectrum: &CorrelationSpectrum) -> Result<Self> {
        Self::with_options(params, spectrum, RealDensityOptions::default())
    }

    pub fn with_options(
        params: &EnsembleParams,
        spectrum: &CorrelationSpectrum,
        options: RealDensityOptions,
    ) -> Result<Self> {
        if params.beta() != Beta::Real {
            return Err(Error::invalid("the real-matrix density needs beta = 1"));
        }
        require_exact_spectrum(params, spectrum)?;
        if params.n1() < 2 || params.n2() < 2 || params.mu() < 2 {
            return Err(Error::invalid(format!(
                "the real-matrix density needs n1, n2 >= 2 and n1 + n2 - p >= 2, got p={}, n1={}, n2={}",
                params.p(),
                params.n1(),
                params.n2()
            )));
        }
        let mut ctx = Self {
            params: *params,
            spectrum: spectrum.clone(),
            options,
            sign: 1.0,
        };
        ctx.sign = ctx.calibrate_sign()?;
        debug!("real density sign calibration {}", ctx.sign);
        Ok(ctx)
    }

    /// The sign that makes the density positive at whichever probe point
    /// `b = Λ_j n2/n1` gives the largest magnitude.
    fn calibrate_sign(&self) -> Result<f64> {
        let ratio = self.params.n2() as f64 / self.params.n1() as f64;
        let mut best = 0.0f64;
        for &l in self.spectrum.lambdas() {
            let v = self.printed_sum(l * ratio)?;
            if v.abs() > best.abs() {
                best = v;
            }
        }
        if best == 0.0 {
            return Err(Error::numerical(
                "density vanishes at every probe point; cannot fix its sign",
            ));
        }
        Ok(best.signum())
    }

    pub fn params(&self) -> &EnsembleParams {
        &self.params
    }

    pub fn spectrum(&self) -> &CorrelationSpectrum {
        &self.spectrum
    }

    pub fn options(&self) -> &RealDensityOptions {
        &self.options
    }

    /// Overall sign applied to the printed sum (`-1` in every case tested).
    pub fn sign_calibration(&self) -> f64 {
        self.sign
    }

    /// Normalization applied on top of the printed prefactor `1/(8π)`.
    pub fn trace_normalization(&self) -> f64 {
        1.0 / self.params.p() as f64
    }

    fn ln_weight(&self, a: i64, c: i64, b: f64, skip: Option<usize>, r: f64) -> f64 {
        let mut ln = 0.5 * a as f64 * r.ln() - 0.5 * c as f64 * r.ln_1p();
        for (k, lam) in self.spectrum.lambdas().iter().enumerate() {
            if Some(k) != skip {
                ln -= 0.5 * (b / lam - r).abs().ln();
            }
        }
        ln
    }

    fn check_cell_args(&self, l: usize, b: f64) -> Result<()> {
        if l > self.params.p() {
            return Err(Error::invalid(format!(
                "cell index {l} exceeds p = {}",
                self.params.p()
            )));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::invalid(format!("b must be positive, got {b}")));
        }
        Ok(())
    }

    /// `∫_{V_l} r^{a/2} (1+r)^{-c/2} / sqrt|det(bΛ^{-1} - r)| dr`.
    pub fn g0(&self, a: i64, c: i64, l: usize, b: f64) -> Result<f64> {
        self.check_cell_args(l, b)?;
        let (lo, hi) = cell_bounds(b, self.spectrum.lambdas(), l)?;
        if !(hi > lo) {
            return Ok(0.0);
        }
        // Every finite endpoint is either a zero of the determinant or the
        // origin, where odd `a` gives a square-root branch; both are handled
        // by the same substitution.
        let upper_tag = if hi.is_finite() {
            Singularity::Half
        } else {
            Singularity::None
        };
        let cell = Cell::new(lo, hi, Singularity::Half, upper_tag)?;
        integrate_sqrt(|r| self.ln_weight(a, c, b, None, r).exp(), &cell, &self.options.g0)
            .map_err(|e| e.context(format!("g0(a={a}, c={c}, l={l}) at b={b}")))
    }

    /// `g1` for eigenvalue `Λ_i` (1-based `i`): the `g0` integrand times
    /// `1/|bΛ_i^{-1} - r|`, with sign `sign(p - l - i)` on non-adjacent cells
    /// and the finite-part forms on the two cells touching `bΛ_i^{-1}`.
    pub fn g1(&self, a: i64, c: i64, l: usize, b: f64, i: usize) -> Result<f64> {
        self.check_cell_args(l, b)?;
        let p = self.params.p();
        if i == 0 || i > p {
            return Err(Error::invalid(format!("eigenvalue index {i} outside 1..={p}")));
        }
        let (lo, hi) = cell_bounds(b, self.spectrum.lambdas(), l)?;
        if !(hi > lo) {
            return Ok(0.0);
        }
        let e = b / self.spectrum.lambdas()[i - 1];
        let ctx = || format!("g1(a={a}, c={c}, l={l}, i={i}) at b={b}");
        let upper_half = if hi.is_finite() {
            Singularity::Half
        } else {
            Singularity::None
        };
        if l + i == p {
            // Singular edge at the upper end.
            let f = |r: f64| self.ln_weight(a, c, b, Some(i - 1), r).exp();
            let cell = Cell::new(lo, hi, Singularity::Half, Singularity::ThreeHalf)?;
            integrate_pv32(f, &cell, &self.options.g1).map_err(|err| err.context(ctx()))
        } else if l + i == p + 1 {
            // Singular edge at the lower end; enters with an overall minus.
            let f = |r: f64| self.ln_weight(a, c, b, Some(i - 1), r).exp();
            let cell = Cell::new(lo, hi, Singularity::ThreeHalf, upper_half)?;
            integrate_pv32(f, &cell, &self.options.g1)
                .map(|v| -v)
                .map_err(|err| err.context(ctx()))
        } else {
            let sign = if (p as i64 - l as i64 - i as i64) > 0 {
                1.0
            } else {
                -1.0
            };
            let cell = Cell::new(lo, hi, Singularity::Half, upper_half)?;
            integrate_sqrt(
                |r| (self.ln_weight(a, c, b, None, r) - (e - r).abs().ln()).exp(),
                &cell,
                &self.options.g1,
            )
            .map(|v| sign * v)
            .map_err(|err| err.context(ctx()))
        }
    }

    fn tables(&self, b: f64) -> Result<Tables> {
        let p = self.params.p();
        let (n2, mu) = (self.params.n2() as i64, self.params.mu() as i64);
        let lam = self.spectrum.lambdas();

        let mut g0: [Vec<f64>; 4] = Default::default();
        for (k, (a, c)) in g0_family(n2, mu).into_iter().enumerate() {
            g0[k] = (0..=p).map(|l| self.g0(a, c, l, b)).collect::<Result<_>>()?;
        }
        let mut g1: [Vec<f64>; 2] = Default::default();
        for (k, (a, c)) in g1_family(n2, mu).into_iter().enumerate() {
            let mut v = Vec::with_capacity((p + 1) * p);
            for l in 0..=p {
                for i in 1..=p {
                    v.push(self.g1(a, c, l, b, i)?);
                }
            }
            g1[k] = v;
        }

        let c_full = [
            c_integral(n2 - 1, mu - 1, p, b, lam)?,
            c_integral(n2 - 2, mu - 2, p, b, lam)?,
            c_integral(n2, mu, p, b, lam)?,
        ];
        let mut c_one = Vec::with_capacity(p);
        for j in 0..p {
            let rest = without(lam, &[j]);
            c_one.push([
                c_integral(n2 - 1, mu, p - 1, b, &rest)?,
                c_integral(n2 - 2, mu - 1, p - 1, b, &rest)?,
            ]);
        }
        let mut c_two = vec![0.0; p * p];
        for i in 0..p {
            for j in i + 1..p {
                c_two[i * p + j] = c_integral(n2 - 2, mu, p - 2, b, &without(lam, &[i, j]))?;
            }
        }
        Ok(Tables {
            p,
            g0,
            g1,
            c_full,
            c_one,
            c_two,
        })
    }

    /// The contribution of one ordered cell pair, before the pair sign.
    fn pair_term(&self, t: &Tables, l1: usize, l2: usize) -> f64 {
        let p = self.params.p();
        let (n2, mu) = (self.params.n2() as f64, self.params.mu() as f64);
        let g0 = |k: usize, l: usize| t.g0[k][l];
        let [ca, cb, cc] = t.c_full;

        let mut term = mu
            * det3([
                [0.0, g0(0, l1), g0(1, l1)],
                [(n2 - 1.0) * ca, g0(0, l2), g0(1, l2)],
                [(mu - 1.0) * cb, g0(2, l2), g0(3, l2)],
            ]);
        term += (n2 - 1.0)
            * det3([
                [0.0, g0(2, l1), g0(3, l1)],
                [mu * ca, g0(2, l2), g0(3, l2)],
                [n2 * cc, g0(0, l2), g0(1, l2)],
            ]);
        for j in 1..=p {
            let [c1, c2] = t.c_one[j - 1];
            term += 2.0
                * det3([
                    [0.0, t.g1(0, l1, j), t.g1(1, l1, j)],
                    [(n2 - 1.0) * c1, g0(0, l2), g0(1, l2)],
                    [mu * c2, g0(2, l2), g0(3, l2)],
                ]);
        }
        for i in 1..=p {
            for j in i + 1..=p {
                term += 2.0
                    * t.c_two[(i - 1) * p + (j - 1)]
                    * det2([[t.g1(0, l1, i), t.g1(1, l1, i)], [t.g1(0, l2, j), t.g1(1, l2, j)]]);
            }
        }
        term
    }

    fn assemble(&self, t: &Tables, l2_outer: bool) -> f64 {
        let p = self.params.p();
        let mut total = 0.0;
        for outer in 0..=p {
            for inner in 0..=p {
                let (l1, l2) = if l2_outer { (inner, outer) } else { (outer, inner) };
                if (l1 + l2) % 2 == 0 {
                    continue;
                }
                let sign = if (l1 + l2).div_ceil(2) % 2 == 0 { 1.0 } else { -1.0 };
                let sign = if l1 > l2 { sign } else { -sign };
                total += sign * self.pair_term(t, l1, l2);
            }
        }
        total / (8.0 * PI)
    }

    /// The printed finite sum, without sign calibration or `1/p`.
    pub fn printed_sum(&self, b: f64) -> Result<f64> {
        let t = self.tables(b)?;
        Ok(self.assemble(&t, false))
    }

    /// The printed sum accumulated with the cell loops swapped; equal to
    /// [`printed_sum`](Self::printed_sum) up to rounding.
    pub fn printed_sum_swapped_loops(&self, b: f64) -> Result<f64> {
        let t = self.tables(b)?;
        Ok(self.assemble(&t, true))
    }

    /// Calibrated density before clamping; may dip below zero by rounding.
    pub fn cl_level_density_signed(&self, b: f64) -> Result<f64> {
        Ok(self.sign * self.trace_normalization() * self.printed_sum(b)?)
    }

    /// `S'_1(b)`, clamped at zero.
    pub fn cl_level_density(&self, b: f64) -> Result<f64> {
        Ok(self.cl_level_density_signed(b)?.max(0.0))
    }

    /// `S_1(x) = 2/(1+x)^2 S'_1((1-x)/(1+x))`, before clamping.
    pub fn jacobi_level_density_signed(&self, x: f64) -> Result<f64> {
        let b = jacobi_to_cl_point(x)?;
        Ok(2.0 / ((1.0 + x) * (1.0 + x)) * self.cl_level_density_signed(b)?)
    }

    /// `S_1(x)`, clamped at zero.
    pub fn jacobi_level_density(&self, x: f64) -> Result<f64> {
        Ok(self.jacobi_level_density_signed(x)?.max(0.0))
    }

    /// `∫_{-1}^{1} S_1(x) dx` of the calibrated, unclamped density.
    pub fn mass(&self) -> Result<f64> {
        let opts = QuadOptions::default()
            .with_tol(self.options.mass_tol)
            .with_initial_segments(8);
        let failure = std::sync::Mutex::new(None);
        let m = integrate_finite(
            |x| match self.jacobi_level_density_signed(x) {
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
            return Err(e.context("mass integral"));
        }
        m
    }
}

/// The `β = 1` level density on `grid`, renormalized to unit mass.
///
/// Notes on the curve: `mass` (before renormalization), `sign_calibration`,
/// `trace_normalization` and `max_clamp_relative` (largest clamped negative
/// value relative to the peak).
pub fn level_density_curve(ctx: &RealDensityContext, grid: &EvaluationGrid) -> Result<DensityCurve> {
    let raw: Vec<f64> = grid
        .points()
        .par_iter()
        .map(|&v| match grid.domain() {
            Domain::Jacobi => ctx.jacobi_level_density_signed(v),
            Domain::CauchyLorentz => ctx.cl_level_density_signed(v),
        })
        .collect::<Result<_>>()?;
    let mass = ctx.mass()?;
    if !(mass > 0.0) {
        return Err(Error::numerical(format!("real density has non-positive mass {mass}")));
    }
    let peak = raw.iter().copied().fold(0.0, f64::max);
    let clamp = raw.iter().copied().fold(0.0, |m: f64, v| m.max(-v));
    let clamp_rel = if peak > 0.0 { clamp / peak } else { 0.0 };
    if clamp_rel > 1e-3 {
        warn!("real density clamped by {clamp_rel:e} of its peak");
    } else if clamp > 0.0 {
        debug!("real density clamped by {clamp_rel:e} of its peak");
    }
    let values = raw.iter().map(|v| v.max(0.0) / mass).collect();
    Ok(
        DensityCurve::new(grid.clone(), values, Method::ExactReal, (mass - 1.0).abs())?
            .with_note("mass", mass)
            .with_note("sign_calibration", ctx.sign_calibration())
            .with_note("trace_normalization", ctx.trace_normalization())
            .with_note("max_clamp_relative", clamp_rel),
    )
}
