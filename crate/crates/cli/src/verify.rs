//! Self-checks of a build: invariants, dual formulas and reference values,
//! plus (at the full level) Monte Carlo agreement with the exact densities.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use rmt_jacobi::asymptotic::{
    asymptotic_cl_density, asymptotic_cl_density_resolvent, asymptotic_jacobi_density, asymptotic_mass, saddle_roots,
    solve_saddle, IM_TOL_REL,
};
use rmt_jacobi::exact_complex::KernelContext;
use rmt_jacobi::exact_real::{c_integral, RealDensityContext};
use rmt_jacobi::quad::{integrate_sqrt, Cell, QuadOptions};
use rmt_jacobi::sampler::{bin_counts, sample_jacobi};
use rmt_jacobi::stats::{bin_probabilities, binned_l1, multinomial_l1_bound, uniform_edges};
use rmt_jacobi::{cl_to_jacobi_point, jacobi_to_cl_point, Beta, CorrelationSpectrum, EnsembleParams};

use crate::config::OUTLIER_LAMBDAS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Level {
    /// Everything except Monte Carlo.
    Fast,
    Full,
}

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub level: &'static str,
    pub passed: usize,
    pub failed: usize,
    pub checks: Vec<Check>,
}

type Outcome = rmt_jacobi::Result<(bool, String)>;
type CheckFn = fn() -> Outcome;

fn complex3(beta: Beta) -> (EnsembleParams, CorrelationSpectrum) {
    (
        EnsembleParams::new(3, 5, 7, beta).expect("valid"),
        CorrelationSpectrum::new(vec![1.0 / 3.0, 2.0, 4.5]).expect("valid"),
    )
}

fn real2() -> (EnsembleParams, CorrelationSpectrum) {
    (
        EnsembleParams::new(2, 5, 5, Beta::Real).expect("valid"),
        CorrelationSpectrum::new(vec![1.0, 4.0]).expect("valid"),
    )
}

fn outliers32() -> (EnsembleParams, CorrelationSpectrum) {
    (
        EnsembleParams::new(32, 71, 68, Beta::Real).expect("valid"),
        CorrelationSpectrum::new(OUTLIER_LAMBDAS.to_vec()).expect("valid"),
    )
}

fn rejects_duplicates() -> Outcome {
    let err = CorrelationSpectrum::new(vec![1.0, 2.0, 2.0]);
    Ok((err.is_err(), format!("duplicate Λ gives {err:?}")))
}

fn point_map() -> Outcome {
    let mut worst: f64 = 0.0;
    for x in [-0.9, -0.5, 0.0, 0.5, 0.9] {
        worst = worst.max((cl_to_jacobi_point(jacobi_to_cl_point(x)?)? - x).abs());
    }
    Ok((worst <= 4.0 * f64::EPSILON, format!("round-trip error {worst:.1e}")))
}

fn projection() -> Outcome {
    let (params, spec) = complex3(Beta::Complex);
    let ctx = KernelContext::new(&params, &spec)?;
    let cell = Cell::regular(0.0, f64::INFINITY)?;
    let opts = QuadOptions::default().with_initial_segments(8);
    let pts = [0.3, 1.0, 4.0];
    let mut err: f64 = 0.0;
    for &x in &pts {
        for &z in &pts {
            let lhs = params.p() as f64
                * integrate_sqrt(
                    |t| ctx.kernel(x, t).unwrap_or(f64::NAN) * ctx.kernel(t, z).unwrap_or(f64::NAN),
                    &cell,
                    &opts,
                )?;
            err = err.max((lhs - ctx.kernel(x, z)?).abs());
        }
    }
    let mass = ctx.mass()?;
    let ok = err < 1e-8 && (mass - 1.0).abs() < 1e-8;
    Ok((
        ok,
        format!(
            "reproducing-kernel error {err:.1e}; |mass - 1| {:.1e}",
            (mass - 1.0).abs()
        ),
    ))
}

fn mirror_exact() -> Outcome {
    let (params, spec) = complex3(Beta::Complex);
    let a = KernelContext::new(&params, &spec)?;
    let b = KernelContext::new(&params.swapped(), &spec.inverse())?;
    let mut e2: f64 = 0.0;
    for x in [-0.7, -0.4, 0.0, 0.2, 0.6] {
        let (u, v) = (a.jacobi_level_density(x)?, b.jacobi_level_density(-x)?);
        e2 = e2.max(((u - v) / u).abs());
    }
    let (rp, rs) = real2();
    let ra = RealDensityContext::new(&rp, &rs)?;
    let rb = RealDensityContext::new(&rp.swapped(), &rs.inverse())?;
    let mut e1: f64 = 0.0;
    for x in [-0.4, 0.2] {
        let (u, v) = (ra.jacobi_level_density(x)?, rb.jacobi_level_density(-x)?);
        e1 = e1.max(((u - v) / u).abs());
    }
    Ok((
        e2 < 1e-10 && e1 < 1e-3,
        format!("complex rel err {e2:.1e}; real rel err {e1:.1e}"),
    ))
}

fn exact_real_mass() -> Outcome {
    let (params, spec) = real2();
    let ctx = RealDensityContext::new(&params, &spec)?;
    let mass = ctx.mass()?;
    Ok((
        (mass - 1.0).abs() < 1e-3,
        format!(
            "|mass - 1| {:.1e}; calibrated sign {}",
            (mass - 1.0).abs(),
            ctx.sign_calibration()
        ),
    ))
}

/// `C` against its definition as a Fourier coefficient, differentiated in `κ`.
fn c_integral_oracle() -> Outcome {
    let contour = |a: i64, bexp: i64, kappa: f64, e: &[f64]| {
        let n = 2048;
        let coeff = |k: f64| {
            let mut s = 0.0;
            for m in 0..n {
                let phi = 2.0 * PI * m as f64 / n as f64;
                let z = Complex64::from_polar(1.0, phi);
                let mut v = Complex64::from_polar(1.0, -(a as f64) * phi) * (1.0 + z).powi(bexp as i32);
                for x in e {
                    v *= k / x - z;
                }
                s += v.re;
            }
            s / n as f64
        };
        let h = 1e-5;
        (coeff(kappa + h) - coeff(kappa - h)) / (2.0 * h)
    };
    let cases: [(i64, i64, f64, &[f64]); 3] = [
        (2, 3, 1.0, &[1.0, 2.0]),
        (3, 5, 0.7, &[0.5, 1.5, 4.0]),
        (1, 4, 2.0, &[0.3, 3.0]),
    ];
    let mut worst: f64 = 0.0;
    for (a, bexp, kappa, e) in cases {
        let v = c_integral(a, bexp, e.len(), kappa, e)?;
        worst = worst.max((v - contour(a, bexp, kappa, e)).abs() / v.abs().max(1.0));
    }
    Ok((worst < 1e-6, format!("max relative error {worst:.1e}")))
}

fn saddle() -> Outcome {
    let mut res: f64 = 0.0;
    let mut conj: f64 = 0.0;
    let mut multi = 0;
    for (params, spec) in [complex3(Beta::Complex), outliers32()] {
        for k in 1..128 {
            let b = jacobi_to_cl_point(-1.0 + 2.0 * k as f64 / 128.0)?;
            res = res.max(solve_saddle(b, &spec, &params)?.residual);
            let roots = saddle_roots(b, &spec, &params)?;
            multi += usize::from(roots.iter().filter(|z| z.im > IM_TOL_REL * (1.0 + z.re.abs())).count() > 1);
            for z in &roots {
                let d = roots
                    .iter()
                    .map(|w| (w - z.conj()).norm())
                    .fold(f64::INFINITY, f64::min);
                conj = conj.max(d / (1.0 + z.norm()));
            }
        }
    }
    Ok((
        res < 1e-10 && conj < 1e-10 && multi == 0,
        format!("max residual {res:.1e}; conjugation error {conj:.1e}; points with several upper roots {multi}"),
    ))
}

fn degeneracy() -> Outcome {
    let (params, spec) = complex3(Beta::Complex);
    let mut err: f64 = 0.0;
    for l in [2, 3] {
        let (pl, sl) = (params.replicated(l)?, spec.replicated(l));
        for k in 1..32 {
            let x = -1.0 + 2.0 * k as f64 / 32.0;
            let (a, b) = (
                asymptotic_jacobi_density(x, &spec, &params)?,
                asymptotic_jacobi_density(x, &sl, &pl)?,
            );
            err = err.max((a - b).abs() / a.abs().max(1e-12));
        }
    }
    Ok((err < 1e-8, format!("replicated-spectrum relative error {err:.1e}")))
}

fn dual_forms() -> Outcome {
    let (params, spec) = outliers32();
    let mut err: f64 = 0.0;
    for k in 0..64 {
        let b = jacobi_to_cl_point(-1.0 + 2.0 * (k as f64 + 0.5) / 64.0)?;
        let (a, r) = (
            asymptotic_cl_density(b, &spec, &params)?,
            asymptotic_cl_density_resolvent(b, &spec, &params)?,
        );
        err = err.max(if a > 0.0 { ((a - r) / a).abs() } else { r.abs() });
    }
    let mass = asymptotic_mass(&spec, &params, 1e-9)?;
    Ok((
        err < 1e-8 && (mass - 1.0).abs() < 1e-6,
        format!(
            "dual-form relative error {err:.1e}; |mass - 1| {:.1e}",
            (mass - 1.0).abs()
        ),
    ))
}

const SEED: u64 = 20_240_601;

fn mc_against<F>(params: &EnsembleParams, spec: &CorrelationSpectrum, density: F) -> Outcome
where
    F: Fn(f64) -> rmt_jacobi::Result<f64> + Sync,
{
    let bins = 60;
    let batch = sample_jacobi(params, spec, 50_000, SEED)?;
    let counts = bin_counts(batch.pooled(), bins, -1.0, 1.0);
    let probs = bin_probabilities(density, &uniform_edges(-1.0, 1.0, bins), 1e-9)?;
    let n: u64 = counts.iter().sum();
    let (l1, bound) = (binned_l1(&counts, &probs)?, multinomial_l1_bound(&probs, n));
    Ok((l1 < bound, format!("binned L1 {l1:.5} against 3σ bound {bound:.5}")))
}

fn mc_complex() -> Outcome {
    let (params, spec) = complex3(Beta::Complex);
    let ctx = KernelContext::new(&params, &spec)?;
    mc_against(&params, &spec, |x| ctx.jacobi_level_density(x))
}

fn mc_real() -> Outcome {
    let (params, spec) = real2();
    let ctx = RealDensityContext::new(&params, &spec)?;
    let mass = ctx.mass()?;
    mc_against(&params, &spec, |x| Ok(ctx.jacobi_level_density(x)? / mass))
}

pub fn run(level: Level) -> Report {
    let mut list: Vec<(&'static str, CheckFn)> = vec![
        ("duplicate_spectrum_rejected", rejects_duplicates),
        ("point_map_round_trip", point_map),
        ("kernel_projection_and_mass", projection),
        ("exact_mirror_symmetry", mirror_exact),
        ("exact_real_mass", exact_real_mass),
        ("c_integral_contour_oracle", c_integral_oracle),
        ("saddle_residual_and_conjugation", saddle),
        ("degeneracy_invariance", degeneracy),
        ("dual_forms_and_asymptotic_mass", dual_forms),
    ];
    if level == Level::Full {
        list.push(("monte_carlo_vs_exact_complex", mc_complex));
        list.push(("monte_carlo_vs_exact_real", mc_real));
    }
    let checks: Vec<Check> = list
        .into_iter()
        .map(|(name, f)| {
            let t = Instant::now();
            let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
            Check {
                name,
                passed,
                detail,
                seconds: t.elapsed().as_secs_f64(),
            }
        })
        .collect();
    let passed = checks.iter().filter(|c| c.passed).count();
    Report {
        level: match level {
            Level::Fast => "fast",
            Level::Full => "full",
        },
        passed,
        failed: checks.len() - passed,
        checks,
    }
}
