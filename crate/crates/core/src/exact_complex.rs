//! Exact finite-size statistics of the complex (`β = 2`) ensembles: the
//! eigenvalue joint density, its determinantal kernel, k-point correlations
//! and the level density.
//!
//! Work happens in the Cauchy-Lorentz coordinate `b`; Jacobi quantities
//! follow from `b = (1-x)/(1+x)`. All factorial ratios and large powers are
//! carried as logarithms and exponentiated once per term.

use log::{debug, warn};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    jacobi_to_cl_point, Beta, CorrelationSpectrum, DensityCurve, Domain, EnsembleParams, EvaluationGrid, Method,
    DEFAULT_MIN_GAP,
};
use crate::quad::{integrate_finite, QuadOptions};
use crate::special::{
    elementary_symmetric_all, ln_factorial, sign_ln, signed_ln_det, signed_ln_vandermonde, sum_signed_exp_with_error,
};

/// Mass deviation above which a computed curve is rescaled to unit mass.
pub const MASS_RESCALE_THRESHOLD: f64 = 1e-6;

/// Largest tolerated worst-case rounding bound on a Jacobi-coordinate density
/// value. The closed-form sums alternate in sign; past roughly `p = 20` they
/// cancel beyond what double precision can resolve and evaluation fails
/// instead of returning noise.
pub const CANCELLATION_TOL: f64 = 1e-4;

/// Checks the spectrum is usable by formulas that divide by eigenvalue
/// differences.
pub(crate) fn require_exact_spectrum(params: &EnsembleParams, spectrum: &CorrelationSpectrum) -> Result<()> {
    spectrum.check_against(params)?;
    let gap = if spectrum.min_gap() > 0.0 {
        spectrum.min_gap()
    } else {
        DEFAULT_MIN_GAP
    };
    spectrum.require_nondegenerate(gap)
}

/// Precomputed kernel coefficients for one `(params, spectrum)` pair.
#[derive(Debug, Clone)]
pub struct KernelContext {
    params: EnsembleParams,
    spectrum: CorrelationSpectrum,
    /// `(sign, ln|c_ij|)`, row-major in `(i - 1, j - 1)`.
    coeff: Vec<(f64, f64)>,
    ln_jpd_constant_printed: f64,
    /// `None` when the probe determinant was lost to cancellation.
    jpd_constant_correction: Option<f64>,
}

impl KernelContext {
    pub fn new(params: &EnsembleParams, spectrum: &CorrelationSpectrum) -> Result<Self> {
        if params.beta() != Beta::Complex {
            return Err(Error::invalid("the determinantal kernel exists only for beta = 2"));
        }
        require_exact_spectrum(params, spectrum)?;
        let p = params.p();
        let (n1, n2, mu) = (params.n1(), params.n2(), params.mu());
        let lam = spectrum.lambdas();

        let mut coeff = vec![(0.0, f64::NEG_INFINITY); p * p];
        for j in 0..p {
            let others: Vec<f64> = lam
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != j)
                .map(|(_, v)| *v)
                .collect();
            let e = elementary_symmetric_all(&others);
            let (den_sign, den_ln) = others.iter().fold((1.0, 0.0), |(s, l), o| {
                (s * (lam[j] - o).signum(), l + (lam[j] - o).abs().ln())
            });
            for i in 1..=p {
                let (e_sign, e_ln) = sign_ln(e[p - i]);
                let sign = if (p - i).is_multiple_of(2) { 1.0 } else { -1.0 } * e_sign * den_sign;
                let ln =
                    ln_factorial(mu as u64) - ln_factorial((n2 - p + i - 1) as u64) - ln_factorial((n1 - i) as u64)
                        + e_ln
                        - den_ln
                        + n1 as f64 * lam[j].ln();
                coeff[(i - 1) * p + j] = (sign, ln);
            }
        }

        let ln_jpd_constant_printed = -ln_factorial(p as u64)
            + (0..p)
                .map(|j| {
                    ln_factorial(mu as u64) - ln_factorial((n2 - p + j) as u64) - ln_factorial((n1 - j + 1) as u64)
                })
                .sum::<f64>();

        let mut ctx = Self {
            params: *params,
            spectrum: spectrum.clone(),
            coeff,
            ln_jpd_constant_printed,
            jpd_constant_correction: None,
        };
        // the level density does not need the constant, so a failed probe
        // only disables the joint density
        match ctx.measure_jpd_correction() {
            Ok(c) => {
                debug!("jpd constant correction factor {c}");
                ctx.jpd_constant_correction = Some(c);
            }
            Err(e) => warn!("joint density unavailable: {e}"),
        }
        Ok(ctx)
    }

    /// The joint density and the `k = p` correlation function must agree;
    /// their ratio at a probe point fixes the joint-density constant.
    fn measure_jpd_correction(&self) -> Result<f64> {
        let n_ratio = self.params.n2() as f64 / self.params.n1() as f64;
        let probe: Vec<f64> = self.spectrum.lambdas().iter().map(|l| l * n_ratio).collect();
        let (s_k, ln_k) = self.ln_k_point(&probe);
        let (s_j, ln_j) = self.ln_jpd_uncorrected(&probe)?;
        if s_k <= 0.0 || s_j <= 0.0 {
            return Err(Error::numerical(
                "joint density probe is not positive; cannot calibrate its constant",
            ));
        }
        // the ratio is known to be the factorial shift prod (n1-j+1)(n1-j);
        // disagreement means the probe determinant is rounding noise
        let n1 = self.params.n1() as f64;
        let ln_shift: f64 = (0..self.params.p())
            .map(|j| ((n1 - j as f64 + 1.0) * (n1 - j as f64)).ln())
            .sum();
        let measured = ln_k - ln_j;
        if (measured - ln_shift).abs() > 1e-6 {
            return Err(Error::numerical(format!(
                "joint density probe gives constant ratio e^{measured:.6} against e^{ln_shift:.6}"
            )));
        }
        Ok(measured.exp())
    }

    pub fn params(&self) -> &EnsembleParams {
        &self.params
    }

    pub fn spectrum(&self) -> &CorrelationSpectrum {
        &self.spectrum
    }

    /// `c_ij` as a plain number (may overflow for large matrices).
    pub fn coefficient(&self, i: usize, j: usize) -> f64 {
        let (s, l) = self.coeff[(i - 1) * self.params.p() + (j - 1)];
        s * l.exp()
    }

    /// Factor by which the printed joint-density constant had to be
    /// multiplied to match the kernel determinant.
    pub fn jpd_constant_correction(&self) -> Result<f64> {
        self.jpd_constant_correction
            .ok_or_else(|| Error::numerical("joint density constant could not be calibrated at this size"))
    }

    pub fn ln_jpd_constant_printed(&self) -> f64 {
        self.ln_jpd_constant_printed
    }

    fn kernel_unchecked(&self, b1: f64, b2: f64) -> f64 {
        self.kernel_with_error(b1, b2).0
    }

    fn kernel_with_error(&self, b1: f64, b2: f64) -> (f64, f64) {
        let p = self.params.p();
        let lam = self.spectrum.lambdas();
        let exp_b2 = (self.params.n2() - p) as f64;
        let exp_sum = -((self.params.mu() + 1) as f64);
        let (lb1, lb2) = (b1.ln(), b2.ln());
        let psi: Vec<f64> = lam.iter().map(|l| exp_b2 * lb2 + exp_sum * (b2 + l).ln()).collect();
        let terms = (0..p).flat_map(|i| {
            let coeff = &self.coeff;
            let psi = &psi;
            (0..p).map(move |j| {
                let (s, l) = coeff[i * p + j];
                (s, l + i as f64 * lb1 + psi[j])
            })
        });
        let (v, err) = sum_signed_exp_with_error(terms);
        (v / p as f64, err / p as f64)
    }

    /// `K(b1, b2)`; note the kernel is not symmetric. Unlike the level
    /// densities it is not checked for cancellation.
    pub fn kernel(&self, b1: f64, b2: f64) -> Result<f64> {
        check_positive(&[b1, b2])?;
        Ok(self.kernel_unchecked(b1, b2))
    }

    fn ln_k_point(&self, points: &[f64]) -> (f64, f64) {
        let p = self.params.p();
        let k = points.len();
        let (s, l) = signed_ln_det(k, |a, b| sign_ln(self.kernel_unchecked(points[a], points[b])));
        let pref = ln_factorial((p - k) as u64) + k as f64 * (p as f64).ln() - ln_factorial(p as u64);
        (s, l + pref)
    }

    /// `R'^k(b_1..b_k) = (p-k)! p^k / p! · det[K(b_l, b_m)]`.
    pub fn k_point_correlation(&self, points: &[f64]) -> Result<f64> {
        let k = points.len();
        if k == 0 || k > self.params.p() {
            return Err(Error::invalid(format!(
                "k-point correlation needs 1 <= k <= p = {}, got k = {k}",
                self.params.p()
            )));
        }
        check_positive(points)?;
        let (s, l) = self.ln_k_point(points);
        Ok(s * l.exp())
    }

    fn ln_jpd_uncorrected(&self, b: &[f64]) -> Result<(f64, f64)> {
        let p = self.params.p();
        if b.len() != p {
            return Err(Error::invalid(format!(
                "joint density needs {p} points, got {}",
                b.len()
            )));
        }
        check_positive(b)?;
        check_distinct(b)?;
        let lam = self.spectrum.lambdas();
        let (n1, n2, mu) = (self.params.n1(), self.params.n2(), self.params.mu());
        let (sb, lb) = signed_ln_vandermonde(b);
        let (sl, ll) = signed_ln_vandermonde(lam);
        let (sd, ld) = signed_ln_det(p, |i, j| {
            (
                1.0,
                (n2 - p) as f64 * b[i].ln() - (mu + 1) as f64 * (b[i] + lam[j]).ln(),
            )
        });
        let ln_det_lam: f64 = lam.iter().map(|l| l.ln()).sum();
        Ok((
            sb * sl * sd,
            self.ln_jpd_constant_printed + n1 as f64 * ln_det_lam + lb - ll + ld,
        ))
    }

    /// Joint density of the `p` Cauchy-Lorentz eigenvalues, with the
    /// calibrated constant.
    pub fn joint_probability_density(&self, b: &[f64]) -> Result<f64> {
        let (s, l) = self.ln_jpd_uncorrected(b)?;
        Ok(s * (l + self.jpd_constant_correction()?.ln()).exp())
    }

    /// `S'_2(b) = K(b, b)`.
    pub fn cl_level_density(&self, b: f64) -> Result<f64> {
        check_positive(&[b])?;
        let (v, err) = self.kernel_with_error(b, b);
        // judge the error in Jacobi units, where densities are O(1)
        let x = crate::model::cl_to_jacobi_point(b)?;
        check_cancellation(v, err * 0.5 * (1.0 + x) * (1.0 + x), b)?;
        Ok(v)
    }

    /// Closed-form Jacobi level density, summed directly in `x` rather than
    /// through the kernel; the two routes cross-check each other.
    pub fn jacobi_level_density(&self, x: f64) -> Result<f64> {
        let b = jacobi_to_cl_point(x)?;
        let p = self.params.p();
        let lam = self.spectrum.lambdas();
        let (n2, mu) = (self.params.n2(), self.params.mu());
        let lb = b.ln();
        let ljac = -2.0 * (1.0 + x).ln();
        let terms = (1..=p).flat_map(|i| {
            (0..p).map(move |j| {
                let (s, l) = self.coeff[(i - 1) * p + j];
                let e = (n2 - p + i - 1) as f64 * lb - (mu + 1) as f64 * (b + lam[j]).ln();
                (s, l + ljac + e)
            })
        });
        let (v, err) = sum_signed_exp_with_error(terms);
        let scale = 2.0 / p as f64;
        check_cancellation(scale * v, scale * err, b)?;
        Ok(scale * v)
    }

    /// `∫_{-1}^{1} S_2(x) dx`, equal to the Cauchy-Lorentz mass.
    pub fn mass(&self) -> Result<f64> {
        let opts = QuadOptions::default().with_initial_segments(16);
        integrate_finite(|x| self.jacobi_level_density(x).unwrap_or(f64::NAN), -1.0, 1.0, &opts)
    }
}

fn check_cancellation(value: f64, err: f64, b: f64) -> Result<()> {
    if err > CANCELLATION_TOL {
        return Err(Error::numerical(format!(
            "exact density at b = {b} is dominated by cancellation \
             (value {value:.3e}, rounding bound {err:.1e}); use the asymptotic method"
        )));
    }
    Ok(())
}

fn check_positive(points: &[f64]) -> Result<()> {
    match points.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
        Some(bad) => Err(Error::invalid(format!(
            "Cauchy-Lorentz points must be positive, got {bad}"
        ))),
        None => Ok(()),
    }
}

fn check_distinct(points: &[f64]) -> Result<()> {
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if points[i] == points[j] {
                return Err(Error::invalid(format!("coincident points b = {}", points[i])));
            }
        }
    }
    Ok(())
}

/// `∫ dμ(U) det^{-(n1+n2)}(U b U† + Λ)` over the unitary group, in closed
/// form:
///
/// `∏_{j<p} j! μ!/(μ+j)! · det[(b_i + Λ_j)^{-(μ+1)}] / (Δ(b) Δ(Λ))`.
///
/// The constant was pinned down against Haar Monte Carlo averages for
/// `p = 2, 3, 4`.
pub fn hciz_cauchy_group_integral(b: &[f64], spectrum: &CorrelationSpectrum, params: &EnsembleParams) -> Result<f64> {
    let p = params.p();
    spectrum.check_against(params)?;
    if b.len() != p {
        return Err(Error::invalid(format!(
            "group integral needs {p} points, got {}",
            b.len()
        )));
    }
    check_positive(b)?;
    check_distinct(b)?;
    check_distinct(spectrum.lambdas())?;
    let lam = spectrum.lambdas();
    let mu = params.mu();
    let ln_pref: f64 = (0..p)
        .map(|j| ln_factorial(j as u64) + ln_factorial(mu as u64) - ln_factorial((mu + j) as u64))
        .sum();
    let (sd, ld) = signed_ln_det(p, |i, j| (1.0, -((mu + 1) as f64) * (b[i] + lam[j]).ln()));
    let (sb, lb) = signed_ln_vandermonde(b);
    let (sl, ll) = signed_ln_vandermonde(lam);
    Ok(sd * sb * sl * (ln_pref + ld - lb - ll).exp())
}

/// Evaluates the exact `β = 2` level density on `grid` (either domain).
///
/// The mass over the whole domain is measured by quadrature; if it misses 1
/// by more than [`MASS_RESCALE_THRESHOLD`] the curve is rescaled and the
/// factor recorded as the `mass_correction` note.
pub fn level_density_curve(ctx: &KernelContext, grid: &EvaluationGrid) -> Result<DensityCurve> {
    let raw: Vec<f64> = grid
        .points()
        .par_iter()
        .map(|&v| match grid.domain() {
            Domain::Jacobi => ctx.jacobi_level_density(v),
            Domain::CauchyLorentz => ctx.cl_level_density(v),
        })
        .collect::<Result<_>>()?;
    let mass = ctx.mass()?;
    let residual = (mass - 1.0).abs();
    let scale = if residual > MASS_RESCALE_THRESHOLD {
        warn!("exact complex density has mass {mass}; rescaling");
        1.0 / mass
    } else {
        1.0
    };
    let peak = raw.iter().copied().fold(0.0, f64::max);
    let clamp = raw.iter().copied().fold(0.0, |m: f64, v| m.max(-v));
    let values = raw.iter().map(|v| v.max(0.0) * scale).collect();
    let curve = DensityCurve::new(grid.clone(), values, Method::ExactComplex, residual)?
        .with_note("mass", mass)
        .with_note("mass_correction", scale)
        .with_note("max_clamp_relative", if peak > 0.0 { clamp / peak } else { 0.0 });
    Ok(match ctx.jpd_constant_correction() {
        Ok(c) => curve.with_note("jpd_constant_correction", c),
        Err(_) => curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate_sqrt, Cell};
    use crate::sampler::sample_rng;
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn complex3() -> KernelContext {
        KernelContext::new(
            &EnsembleParams::new(3, 5, 7, Beta::Complex).unwrap(),
            &CorrelationSpectrum::new(vec![1.0 / 3.0, 2.0, 4.5]).unwrap(),
        )
        .unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn rejects_real_beta_and_size_mismatch() {
        let spec = CorrelationSpectrum::new(vec![1.0, 2.0]).unwrap();
        assert!(KernelContext::new(&EnsembleParams::new(2, 3, 3, Beta::Real).unwrap(), &spec).is_err());
        assert!(KernelContext::new(&EnsembleParams::new(3, 3, 3, Beta::Complex).unwrap(), &spec).is_err());
    }

    #[test]
    fn scalar_case_closed_form() {
        let params = EnsembleParams::new(1, 2, 1, Beta::Complex).unwrap();
        let spec = CorrelationSpectrum::new(vec![1.0]).unwrap();
        let ctx = KernelContext::new(&params, &spec).unwrap();
        for b in [0.3, 1.0, 4.0] {
            let expect = 2.0 * (b + 1.0f64).powi(-3);
            assert!(rel(ctx.kernel(b, b).unwrap(), expect) < 1e-13);
            assert!(rel(ctx.joint_probability_density(&[b]).unwrap(), expect) < 1e-12);
        }
        assert!((ctx.joint_probability_density(&[1.0]).unwrap() - 0.25).abs() < 1e-13);
        // Printed constant 1/3 against the true 2.
        assert!(rel(ctx.jpd_constant_correction().unwrap(), 6.0) < 1e-12);
    }

    #[test]
    fn jpd_correction_is_the_factorial_shift() {
        let ctx = complex3();
        let expect: f64 = (0..3).map(|j| ((5 - j + 1) * (5 - j)) as f64).product();
        let c = ctx.jpd_constant_correction().unwrap();
        assert!(rel(c, expect) < 1e-10, "{c}");
    }

    #[test]
    fn unit_mass() {
        let m = complex3().mass().unwrap();
        assert!((m - 1.0).abs() < 1e-8, "{m}");
    }

    #[test]
    fn projection_identity() {
        let ctx = complex3();
        let p = 3.0;
        let cell = Cell::regular(0.0, f64::INFINITY).unwrap();
        let opts = QuadOptions::default().with_initial_segments(8);
        let (x, z) = (0.5, 1.5);
        let lhs = p * integrate_sqrt(
            |t| ctx.kernel_unchecked(x, t) * ctx.kernel_unchecked(t, z),
            &cell,
            &opts,
        )
        .unwrap();
        let rhs = ctx.kernel(x, z).unwrap();
        assert!((lhs - rhs).abs() < 1e-8, "{lhs} vs {rhs}");
    }

    #[test]
    fn full_correlation_is_the_joint_density() {
        let ctx = complex3();
        let b = [0.3, 1.1, 2.7];
        let r = ctx.k_point_correlation(&b).unwrap();
        let j = ctx.joint_probability_density(&b).unwrap();
        assert!(rel(r, j) < 1e-10, "{r} vs {j}");
        let swapped = ctx.joint_probability_density(&[1.1, 0.3, 2.7]).unwrap();
        assert!(rel(swapped, j) < 1e-12);
    }

    #[test]
    fn one_point_and_repulsion() {
        let ctx = complex3();
        assert!(rel(ctx.k_point_correlation(&[0.8]).unwrap(), ctx.kernel(0.8, 0.8).unwrap()) < 1e-14);
        let d = ctx.k_point_correlation(&[0.8, 0.8]).unwrap();
        assert!(d.abs() < 1e-12 * ctx.kernel(0.8, 0.8).unwrap().powi(2));
        assert!(ctx.k_point_correlation(&[0.1, 0.2, 0.3, 0.4]).is_err());
        assert!(ctx.joint_probability_density(&[0.5, 0.5, 1.0]).is_err());
    }

    #[test]
    fn two_point_marginalizes_to_density() {
        let ctx = complex3();
        let cell = Cell::regular(0.0, f64::INFINITY).unwrap();
        let opts = QuadOptions::default().with_initial_segments(8);
        let b1 = 0.9;
        let m = integrate_sqrt(|t| ctx.k_point_correlation(&[b1, t]).unwrap(), &cell, &opts).unwrap();
        assert!(rel(m, ctx.kernel(b1, b1).unwrap()) < 1e-8);
    }

    #[test]
    fn two_routes_agree() {
        let ctx = complex3();
        for x in [-0.95, -0.5, 0.0, 0.3, 0.9] {
            let b: f64 = (1.0 - x) / (1.0 + x);
            let via_kernel = 2.0 / (1.0 + x).powi(2) * ctx.cl_level_density(b).unwrap();
            let direct = ctx.jacobi_level_density(x).unwrap();
            assert!(rel(via_kernel, direct) < 1e-10, "x={x}");
        }
    }

    #[test]
    fn exchange_symmetry() {
        let ctx = complex3();
        let params = EnsembleParams::new(3, 7, 5, Beta::Complex).unwrap();
        let mirror = KernelContext::new(&params, &ctx.spectrum().inverse()).unwrap();
        for x in [-0.5, 0.0, 0.5] {
            let a = ctx.jacobi_level_density(x).unwrap();
            let b = mirror.jacobi_level_density(-x).unwrap();
            assert!((a - b).abs() < 1e-10, "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn group_integral_small_cases() {
        let params = EnsembleParams::new(1, 3, 2, Beta::Complex).unwrap();
        let spec = CorrelationSpectrum::new(vec![1.5]).unwrap();
        let v = hciz_cauchy_group_integral(&[0.7], &spec, &params).unwrap();
        assert!(rel(v, 2.2f64.powi(-5)) < 1e-13);

        let params = EnsembleParams::new(2, 3, 3, Beta::Complex).unwrap();
        let spec = CorrelationSpectrum::new(vec![1.0, 4.0]).unwrap();
        let a = hciz_cauchy_group_integral(&[1.0, 2.0], &spec, &params).unwrap();
        let b = hciz_cauchy_group_integral(&[2.0, 1.0], &spec, &params).unwrap();
        assert!(rel(a, b) < 1e-14);
        assert!(hciz_cauchy_group_integral(&[1.0, 1.0], &spec, &params).is_err());
    }

    fn haar_unitary_2(seed: u64, k: u64) -> DMatrix<Complex64> {
        let mut rng = sample_rng(seed, k);
        let mut g = DMatrix::<Complex64>::zeros(2, 2);
        for v in g.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *v = Complex64::new(re, im);
        }
        let qr = g.qr();
        let (q, r) = (qr.q(), qr.r());
        let mut u = q;
        for j in 0..2 {
            let ph = r[(j, j)] / r[(j, j)].norm();
            for i in 0..2 {
                u[(i, j)] *= ph;
            }
        }
        u
    }

    #[test]
    fn group_integral_matches_haar_average() {
        let params = EnsembleParams::new(2, 3, 3, Beta::Complex).unwrap();
        let spec = CorrelationSpectrum::new(vec![1.0, 4.0]).unwrap();
        let b = [1.0, 2.0];
        let exact = hciz_cauchy_group_integral(&b, &spec, &params).unwrap();
        let n = 1_000_000u64;
        let (sum, sum2) = (0..n)
            .into_par_iter()
            .map(|k| {
                let u = haar_unitary_2(17, k);
                let bm = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                    Complex64::new(b[0], 0.0),
                    Complex64::new(b[1], 0.0),
                ]));
                let lm = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                    Complex64::new(1.0, 0.0),
                    Complex64::new(4.0, 0.0),
                ]));
                let m = &u * bm * u.adjoint() + lm;
                let v = m.determinant().re.powi(-6);
                (v, v * v)
            })
            .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
        let mean = sum / n as f64;
        let se = ((sum2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - exact).abs() < 3.0 * se, "{mean} ± {se} vs {exact}");
    }

    #[test]
    fn curve_on_both_domains() {
        let ctx = complex3();
        let grid = EvaluationGrid::default_jacobi();
        let c = level_density_curve(&ctx, &grid).unwrap();
        assert!(c.normalization_residual() < 1e-6);
        assert_eq!(c.note("mass_correction"), Some(1.0));
        let cl = EvaluationGrid::log_uniform(50, 1e-2, 1e2).unwrap();
        let c2 = level_density_curve(&ctx, &cl).unwrap();
        assert_eq!(c2.domain(), Domain::CauchyLorentz);
    }
}
