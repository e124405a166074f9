//! Monte Carlo sampling of correlated Jacobi and Cauchy-Lorentz eigenvalues.
//!
//! Because only the spectrum of the effective correlation matrix matters,
//! both Gaussian blocks are drawn in its eigenbasis: `F` with identity
//! covariance and `B` with covariance `diag(Λ)`.

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Beta, CorrelationSpectrum, DensityCurve, Domain, EnsembleParams, EvaluationGrid, Method};

/// Random stream for sample `index` of a run seeded with `seed`. Streams are
/// independent of thread scheduling, so serial and parallel runs agree.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Matrix entries that can be drawn from a standard (real or complex)
/// Gaussian.
pub trait GaussianEntry: ComplexField<RealField = f64> + Copy {
    fn standard<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl GaussianEntry for f64 {
    fn standard<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}

impl GaussianEntry for Complex64 {
    /// Real and imaginary parts each of variance 1/2, so `E|z|^2 = 1`.
    fn standard<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }
}

/// A Gaussian block, real or complex depending on the Dyson index.
#[derive(Debug, Clone, PartialEq)]
pub enum GaussianMatrix {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

/// `diag(sqrt_cov) · G` with `G` a `rows × cols` matrix of standard Gaussian
/// entries, real for `β = 1` and complex for `β = 2`.
pub fn sample_correlated_gaussian<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    beta: Beta,
    sqrt_cov: &[f64],
    rng: &mut R,
) -> Result<GaussianMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid(format!(
            "matrix dimensions must be positive, got {rows}x{cols}"
        )));
    }
    if sqrt_cov.len() != rows {
        return Err(Error::invalid(format!(
            "covariance square root has {} entries for {rows} rows",
            sqrt_cov.len()
        )));
    }
    if let Some(bad) = sqrt_cov.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
        return Err(Error::invalid(format!(
            "covariance entries must be positive, got {bad}"
        )));
    }
    Ok(match beta {
        Beta::Real => GaussianMatrix::Real(gaussian_block(rows, cols, sqrt_cov, rng)),
        Beta::Complex => GaussianMatrix::Complex(gaussian_block(rows, cols, sqrt_cov, rng)),
    })
}

// Drawn row by row so that the stream layout does not depend on nalgebra's
// storage order.
fn gaussian_block<T: GaussianEntry, R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    sqrt_cov: &[f64],
    rng: &mut R,
) -> DMatrix<T> {
    let mut m = DMatrix::<T>::zeros(rows, cols);
    for i in 0..rows {
        let s = T::from_real(sqrt_cov[i]);
        for j in 0..cols {
            m[(i, j)] = T::standard(rng) * s;
        }
    }
    m
}

/// Eigenvalues of `H = (W1 - W2)(W1 + W2)^{-1}` in ascending order, computed
/// from the Hermitian form `A^{-1/2}(W1 - W2)A^{-1/2}`, `A = W1 + W2`.
fn jacobi_eigenvalues<T: GaussianEntry, R: Rng + ?Sized>(
    params: &EnsembleParams,
    sqrt_lambda: &[f64],
    rng: &mut R,
) -> Option<Vec<f64>> {
    let p = params.p();
    let ones = vec![1.0; p];
    let f = gaussian_block::<T, R>(p, params.n1(), &ones, rng);
    let b = gaussian_block::<T, R>(p, params.n2(), sqrt_lambda, rng);
    let w1 = &f * f.adjoint();
    let w2 = &b * b.adjoint();
    let a = &w1 + &w2;
    let eig = a.symmetric_eigen();
    if eig.eigenvalues.iter().any(|&d| !(d > 0.0)) {
        return None;
    }
    // With A = V D V†, the matrix D^{-1/2} V† (W1 - W2) V D^{-1/2} is unitarily
    // similar to A^{-1/2}(W1 - W2)A^{-1/2}.
    let v = &eig.eigenvectors;
    let mut h = v.adjoint() * (w1 - w2) * v;
    for i in 0..p {
        for j in 0..p {
            let s = 1.0 / (eig.eigenvalues[i] * eig.eigenvalues[j]).sqrt();
            h[(i, j)] = h[(i, j)].scale(s);
        }
    }
    let h = (&h + h.adjoint()).scale(0.5);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    Some(ev)
}

/// Eigenvalue draws, one sorted row of `p` values per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    eigenvalues: Vec<f64>,
    num_samples: usize,
    seed: u64,
    params: EnsembleParams,
    spectrum: CorrelationSpectrum,
    ensemble: Domain,
}

impl SampleBatch {
    pub fn num_samples(&self) -> usize {
        self.num_samples
    }

    pub fn p(&self) -> usize {
        self.params.p()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn params(&self) -> &EnsembleParams {
        &self.params
    }

    pub fn spectrum(&self) -> &CorrelationSpectrum {
        &self.spectrum
    }

    pub fn ensemble(&self) -> Domain {
        self.ensemble
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let p = self.p();
        &self.eigenvalues[k * p..(k + 1) * p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.eigenvalues.chunks_exact(self.p())
    }

    /// All eigenvalues of all samples, row-major.
    pub fn pooled(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Maps a Jacobi batch through `b = (1-x)/(1+x)`. Rows are re-sorted, the
    /// map being decreasing.
    pub fn to_cauchy_lorentz(&self) -> Result<SampleBatch> {
        if self.ensemble != Domain::Jacobi {
            return Err(Error::invalid("batch is already on the Cauchy-Lorentz domain"));
        }
        let p = self.p();
        let mut out = Vec::with_capacity(self.eigenvalues.len());
        for (k, row) in self.rows().enumerate() {
            let mut mapped = Vec::with_capacity(p);
            for &x in row.iter().rev() {
                let b = (1.0 - x) / (1.0 + x);
                if !(b > 0.0 && b.is_finite()) {
                    return Err(Error::numerical(format!(
                        "sample {k}: eigenvalue {x} maps outside (0, inf)"
                    )));
                }
                mapped.push(b);
            }
            out.extend(mapped);
        }
        Ok(SampleBatch {
            eigenvalues: out,
            ensemble: Domain::CauchyLorentz,
            ..self.clone()
        })
    }
}

fn validate_run(params: &EnsembleParams, spectrum: &CorrelationSpectrum, num_samples: usize) -> Result<()> {
    spectrum.check_against(params)?;
    if num_samples == 0 {
        return Err(Error::invalid("num_samples must be positive"));
    }
    Ok(())
}

/// Draws `num_samples` correlated Jacobi matrices and returns their sorted
/// eigenvalues, all in (-1, 1). Sample `k` uses the stream
/// [`sample_rng`]`(seed, k)`.
pub fn sample_jacobi(
    params: &EnsembleParams,
    spectrum: &CorrelationSpectrum,
    num_samples: usize,
    seed: u64,
) -> Result<SampleBatch> {
    validate_run(params, spectrum, num_samples)?;
    let sqrt_lambda: Vec<f64> = spectrum.lambdas().iter().map(|l| l.sqrt()).collect();
    let rows: Vec<Result<Vec<f64>>> = (0..num_samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = sample_rng(seed, k as u64);
            let ev = match params.beta() {
                Beta::Real => jacobi_eigenvalues::<f64, _>(params, &sqrt_lambda, &mut rng),
                Beta::Complex => jacobi_eigenvalues::<Complex64, _>(params, &sqrt_lambda, &mut rng),
            };
            match ev {
                Some(ev) if ev.iter().all(|x| *x > -1.0 && *x < 1.0) => Ok(ev),
                Some(ev) => Err(Error::numerical(format!(
                    "sample {k}: eigenvalues {ev:?} leave (-1, 1)"
                ))),
                None => Err(Error::numerical(format!(
                    "sample {k}: FF†+BB† is not positive definite"
                ))),
            }
        })
        .collect();
    let mut eigenvalues = Vec::with_capacity(num_samples * params.p());
    for row in rows {
        eigenvalues.extend(row?);
    }
    Ok(SampleBatch {
        eigenvalues,
        num_samples,
        seed,
        params: *params,
        spectrum: spectrum.clone(),
        ensemble: Domain::Jacobi,
    })
}

/// Cauchy-Lorentz eigenvalues, obtained by mapping Jacobi draws through
/// `b = (1-x)/(1+x)`; both ensembles have the same law under that map.
pub fn sample_cauchy_lorentz(
    params: &EnsembleParams,
    spectrum: &CorrelationSpectrum,
    num_samples: usize,
    seed: u64,
) -> Result<SampleBatch> {
    sample_jacobi(params, spectrum, num_samples, seed)?.to_cauchy_lorentz()
}

/// Density histogram of all pooled eigenvalues. Jacobi batches are binned on
/// [-1, 1]; Cauchy-Lorentz batches on [0, max b].
pub fn histogram(batch: &SampleBatch, bins: usize) -> Result<DensityCurve> {
    let (lo, hi) = match batch.ensemble() {
        Domain::Jacobi => (-1.0, 1.0),
        Domain::CauchyLorentz => {
            let max = batch.pooled().iter().copied().fold(0.0, f64::max);
            (0.0, max)
        }
    };
    histogram_range(batch, bins, lo, hi)
}

/// Density histogram on `[lo, hi]`, normalized to unit mass over the values
/// that fall inside the range.
pub fn histogram_range(batch: &SampleBatch, bins: usize, lo: f64, hi: f64) -> Result<DensityCurve> {
    if bins < 2 {
        return Err(Error::invalid(format!("need at least 2 bins, got {bins}")));
    }
    if batch.pooled().is_empty() {
        return Err(Error::invalid("cannot histogram an empty batch"));
    }
    if !(hi > lo) {
        return Err(Error::invalid(format!("empty histogram range [{lo}, {hi}]")));
    }
    let counts = bin_counts(batch.pooled(), bins, lo, hi);
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::invalid("no eigenvalue falls inside the histogram range"));
    }
    let width = (hi - lo) / bins as f64;
    let centers: Vec<f64> = (0..bins).map(|k| lo + width * (k as f64 + 0.5)).collect();
    let values: Vec<f64> = counts.iter().map(|&c| c as f64 / (total as f64 * width)).collect();
    let mass: f64 = values.iter().map(|v| v * width).sum();
    let grid = EvaluationGrid::new(centers, batch.ensemble())?;
    DensityCurve::new(grid, values, Method::MonteCarlo, (mass - 1.0).abs())
}

/// Counts of `values` in `bins` equal bins on `[lo, hi]`; out-of-range
/// values are dropped, `hi` itself goes into the last bin.
pub fn bin_counts(values: &[f64], bins: usize, lo: f64, hi: f64) -> Vec<u64> {
    let mut counts = vec![0u64; bins];
    let scale = bins as f64 / (hi - lo);
    for &v in values {
        if v < lo || v > hi {
            continue;
        }
        let k = (((v - lo) * scale) as usize).min(bins - 1);
        counts[k] += 1;
    }
    counts
}
